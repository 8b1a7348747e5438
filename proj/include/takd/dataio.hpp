#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "takd/binio.hpp"
#include "takd/error.hpp"
#include "takd/rng.hpp"

namespace takd {

/// Extra per-frame modality stream (e.g. rectified classifier scores),
/// frame-major: values[s * dim + w].
struct Channel {
    std::uint32_t dim = 0;
    std::vector<double> values;
};

/// A body-joint sequence: J joints tracked over N frames, 3 coordinates per
/// joint, frame-major storage coords[((s * J) + j) * 3 + d]. Channels hold
/// optional per-frame modality vectors shared by all joints.
struct SkeletonSequence {
    std::int32_t label = 0;
    std::int32_t subject = 0;
    std::uint32_t joints = 0;
    std::uint32_t frames = 0;
    std::vector<double> coords;
    std::vector<Channel> channels;

    std::array<double, 3> at(std::uint32_t frame, std::uint32_t joint) const {
        const std::size_t base = (static_cast<std::size_t>(frame) * joints + joint) * 3;
        return {coords[base], coords[base + 1], coords[base + 2]};
    }

    void set(std::uint32_t frame, std::uint32_t joint, const std::array<double, 3>& v) {
        const std::size_t base = (static_cast<std::size_t>(frame) * joints + joint) * 3;
        coords[base] = v[0];
        coords[base + 1] = v[1];
        coords[base + 2] = v[2];
    }
};

enum class KernelKind : std::uint16_t { sck = 0, dck = 1, sck_plus = 2, dck_plus = 3, fused = 4 };

inline const char* kernel_kind_name(KernelKind k) {
    switch (k) {
        case KernelKind::sck: return "sck";
        case KernelKind::dck: return "dck";
        case KernelKind::sck_plus: return "sck_plus";
        case KernelKind::dck_plus: return "dck_plus";
        case KernelKind::fused: return "fused";
    }
    return "unknown";
}

/// Flat descriptor plus provenance header.
struct Descriptor {
    KernelKind kind = KernelKind::sck;
    std::uint64_t config_hash = 0;
    std::uint32_t joint_count = 0;
    std::int32_t label = 0;
    std::int32_t subject = 0;
    std::vector<double> values;
};

namespace detail {

inline void validate_sequence(const SkeletonSequence& s, const std::string& where) {
    if (s.joints < 1 || s.frames < 1) throw io_error(where + ": J and N must be >= 1");
    if (s.coords.size() != static_cast<std::size_t>(s.joints) * s.frames * 3)
        throw io_error(where + ": coords length != N*J*3");
    for (double v : s.coords)
        if (!std::isfinite(v)) throw io_error(where + ": non-finite coordinate");
    for (const auto& ch : s.channels) {
        if (ch.dim < 1 || ch.values.size() != static_cast<std::size_t>(ch.dim) * s.frames)
            throw io_error(where + ": channel length != N*dim");
        for (double v : ch.values)
            if (!std::isfinite(v)) throw io_error(where + ": non-finite channel value");
    }
}

}  // namespace detail

/// Serializes one sequence as a canonical single-line JSON record (keys
/// sorted, shortest round-trip numbers).
inline std::string sequence_to_line(const SkeletonSequence& s) {
    nlohmann::json rec;
    rec["label"] = s.label;
    rec["subject"] = s.subject;
    rec["j"] = s.joints;
    rec["n"] = s.frames;
    rec["coords"] = s.coords;
    if (!s.channels.empty()) {
        nlohmann::json chans = nlohmann::json::array();
        for (const auto& ch : s.channels) {
            nlohmann::json c;
            c["dim"] = ch.dim;
            c["values"] = ch.values;
            chans.push_back(std::move(c));
        }
        rec["channels"] = std::move(chans);
    }
    return rec.dump();
}

inline SkeletonSequence sequence_from_line(const std::string& line, std::size_t line_no) {
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json rec;
    try {
        rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw io_error(where + ": " + e.what());
    }
    SkeletonSequence s;
    try {
        s.label = rec.at("label").get<std::int32_t>();
        s.subject = rec.at("subject").get<std::int32_t>();
        s.joints = rec.at("j").get<std::uint32_t>();
        s.frames = rec.at("n").get<std::uint32_t>();
        s.coords = rec.at("coords").get<std::vector<double>>();
        if (rec.contains("channels")) {
            for (const auto& c : rec.at("channels")) {
                Channel ch;
                ch.dim = c.at("dim").get<std::uint32_t>();
                ch.values = c.at("values").get<std::vector<double>>();
                s.channels.push_back(std::move(ch));
            }
        }
        for (const auto& [key, _] : rec.items())
            if (key != "label" && key != "subject" && key != "j" && key != "n" && key != "coords" &&
                key != "channels")
                throw io_error(where + ": unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
        throw io_error(where + ": " + e.what());
    }
    detail::validate_sequence(s, where);
    return s;
}

inline void save_sequences(const std::string& path, const std::vector<SkeletonSequence>& seqs) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for write: " + path);
    for (const auto& s : seqs) os << sequence_to_line(s) << '\n';
    if (!os) throw io_error("write failed: " + path);
}

inline std::vector<SkeletonSequence> load_sequences(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open: " + path);
    std::vector<SkeletonSequence> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        out.push_back(sequence_from_line(line, line_no));
    }
    return out;
}

/// Subtracts the hip joint from every joint per frame; the hip becomes the
/// origin. Pairwise displacements are untouched.
inline SkeletonSequence hip_center(const SkeletonSequence& s, std::uint32_t hip_index) {
    if (hip_index >= s.joints) throw config_error("hip_center: hip index out of range");
    SkeletonSequence out = s;
    for (std::uint32_t f = 0; f < s.frames; ++f) {
        const auto hip = s.at(f, hip_index);
        for (std::uint32_t j = 0; j < s.joints; ++j) {
            auto p = s.at(f, j);
            out.set(f, j, {p[0] - hip[0], p[1] - hip[1], p[2] - hip[2]});
        }
    }
    return out;
}

namespace detail {

/// Breadth-first order of a parent-array tree; validates single root and
/// acyclicity.
inline std::vector<std::uint32_t> tree_order(const std::vector<std::int32_t>& parents) {
    const std::size_t j = parents.size();
    std::int32_t root = -1;
    for (std::size_t i = 0; i < j; ++i) {
        if (parents[i] < 0) {
            if (root >= 0) throw config_error("skeleton topology: multiple roots");
            root = static_cast<std::int32_t>(i);
        } else if (static_cast<std::size_t>(parents[i]) >= j) {
            throw config_error("skeleton topology: parent index out of range");
        }
    }
    if (root < 0) throw config_error("skeleton topology: no root");
    std::vector<std::vector<std::uint32_t>> kids(j);
    for (std::size_t i = 0; i < j; ++i)
        if (parents[i] >= 0) kids[parents[i]].push_back(static_cast<std::uint32_t>(i));
    std::vector<std::uint32_t> order;
    std::queue<std::uint32_t> q;
    q.push(static_cast<std::uint32_t>(root));
    while (!q.empty()) {
        const std::uint32_t v = q.front();
        q.pop();
        order.push_back(v);
        for (std::uint32_t c : kids[v]) q.push(c);
    }
    if (order.size() != j) throw config_error("skeleton topology: cycle or unreachable joint");
    return order;
}

}  // namespace detail

/// Per-bone length of joint j to its parent, averaged as the median over all
/// frames of all sequences. Root entry is 0.
inline std::vector<double> median_bone_lengths(const std::vector<SkeletonSequence>& seqs,
                                               const std::vector<std::int32_t>& parents) {
    detail::tree_order(parents);
    std::vector<double> out(parents.size(), 0.0);
    for (std::size_t b = 0; b < parents.size(); ++b) {
        if (parents[b] < 0) continue;
        std::vector<double> lens;
        for (const auto& s : seqs) {
            if (s.joints != parents.size()) throw config_error("median_bone_lengths: joint count mismatch");
            for (std::uint32_t f = 0; f < s.frames; ++f) {
                const auto c = s.at(f, static_cast<std::uint32_t>(b));
                const auto p = s.at(f, static_cast<std::uint32_t>(parents[b]));
                lens.push_back(std::hypot(c[0] - p[0], c[1] - p[1], c[2] - p[2]));
            }
        }
        std::sort(lens.begin(), lens.end());
        out[b] = lens.empty() ? 0.0 : lens[lens.size() / 2];
    }
    return out;
}

/// Rescales every bone to the reference length walking the tree from the
/// root, preserving bone directions. Children move rigidly with their
/// parents.
inline SkeletonSequence limb_normalize(const SkeletonSequence& s, const std::vector<std::int32_t>& parents,
                                       const std::vector<double>& reference_lengths) {
    if (parents.size() != s.joints || reference_lengths.size() != s.joints)
        throw config_error("limb_normalize: topology size mismatch");
    const auto order = detail::tree_order(parents);
    for (std::size_t b = 0; b < parents.size(); ++b)
        if (parents[b] >= 0 && !(reference_lengths[b] > 0.0))
            throw config_error("limb_normalize: reference lengths must be positive");
    SkeletonSequence out = s;
    for (std::uint32_t f = 0; f < s.frames; ++f) {
        for (std::uint32_t v : order) {
            if (parents[v] < 0) continue;
            const auto old_child = s.at(f, v);
            const auto old_parent = s.at(f, static_cast<std::uint32_t>(parents[v]));
            const auto new_parent = out.at(f, static_cast<std::uint32_t>(parents[v]));
            double dx = old_child[0] - old_parent[0];
            double dy = old_child[1] - old_parent[1];
            double dz = old_child[2] - old_parent[2];
            const double len = std::hypot(dx, dy, dz);
            if (len > 1e-12) {
                const double k = reference_lengths[v] / len;
                dx *= k;
                dy *= k;
                dz *= k;
            } else {
                dx = dy = dz = 0.0;
            }
            out.set(f, v, {new_parent[0] + dx, new_parent[1] + dy, new_parent[2] + dz});
        }
    }
    return out;
}

/// Splits by subject membership: sequences whose subject is in held_out go to
/// test, the rest to train.
inline std::pair<std::vector<SkeletonSequence>, std::vector<SkeletonSequence>> cross_subject_split(
    const std::vector<SkeletonSequence>& seqs, const std::vector<std::int32_t>& held_out) {
    std::vector<SkeletonSequence> train, test;
    for (const auto& s : seqs) {
        const bool held = std::find(held_out.begin(), held_out.end(), s.subject) != held_out.end();
        (held ? test : train).push_back(s);
    }
    if (train.empty() || test.empty()) throw config_error("cross_subject_split: one side is empty");
    return {std::move(train), std::move(test)};
}

/// Extends a sequence to at least min_frames by wrapping frames cyclically.
inline SkeletonSequence loop_pad(const SkeletonSequence& s, std::uint32_t min_frames) {
    if (s.frames >= min_frames) return s;
    SkeletonSequence out = s;
    out.frames = min_frames;
    out.coords.resize(static_cast<std::size_t>(min_frames) * s.joints * 3);
    for (auto& ch : out.channels) ch.values.resize(static_cast<std::size_t>(min_frames) * ch.dim);
    for (std::uint32_t f = s.frames; f < min_frames; ++f) {
        const std::uint32_t src = f % s.frames;
        for (std::uint32_t j = 0; j < s.joints; ++j) out.set(f, j, s.at(src, j));
        for (std::size_t c = 0; c < s.channels.size(); ++c)
            for (std::uint32_t w = 0; w < s.channels[c].dim; ++w)
                out.channels[c].values[static_cast<std::size_t>(f) * s.channels[c].dim + w] =
                    s.channels[c].values[static_cast<std::size_t>(src) * s.channels[c].dim + w];
    }
    return out;
}

/// Clamps every channel value at zero (score streams are used rectified).
inline SkeletonSequence rectify_scores(const SkeletonSequence& s) {
    SkeletonSequence out = s;
    for (auto& ch : out.channels)
        for (auto& v : ch.values) v = std::max(0.0, v);
    return out;
}

struct SynthConfig {
    std::uint32_t classes = 4;
    std::uint32_t per_class = 30;
    std::uint32_t joints = 8;
    std::uint32_t frames = 40;
    std::uint32_t subjects = 10;
    double noise = 0.05;
    std::uint32_t score_dim = 0;
    std::uint64_t seed = 42;
};

/// Synthetic action dataset: each class is a set of per-joint sinusoidal
/// trajectory templates (class-specific frequency, phase and amplitude);
/// samples add Gaussian jitter. Subjects are assigned round-robin. When
/// score_dim > 0 a rectified per-frame score channel correlated with the
/// class is attached.
inline std::vector<SkeletonSequence> synth_dataset(const SynthConfig& cfg) {
    if (cfg.classes < 2) throw config_error("synth_dataset: need at least 2 classes");
    if (cfg.joints < 1 || cfg.frames < 1 || cfg.subjects < 1) throw config_error("synth_dataset: bad dims");
    struct JointTemplate {
        std::array<double, 3> base, amp, freq, phase;
    };
    std::vector<std::vector<JointTemplate>> templates(cfg.classes);
    Rng template_rng(cfg.seed);
    for (std::uint32_t k = 0; k < cfg.classes; ++k) {
        templates[k].resize(cfg.joints);
        for (std::uint32_t j = 0; j < cfg.joints; ++j) {
            auto& t = templates[k][j];
            for (int d = 0; d < 3; ++d) {
                t.base[d] = template_rng.uniform(-0.35, 0.35);
                t.amp[d] = template_rng.uniform(0.25, 0.55);
                t.freq[d] = (k + 1.0) * (1.0 + 0.2 * template_rng.uniform());
                t.phase[d] = template_rng.uniform(0.0, 2.0 * std::numbers::pi);
            }
        }
    }
    std::vector<SkeletonSequence> out;
    out.reserve(static_cast<std::size_t>(cfg.classes) * cfg.per_class);
    for (std::uint32_t k = 0; k < cfg.classes; ++k) {
        for (std::uint32_t i = 0; i < cfg.per_class; ++i) {
            Rng rng(cfg.seed ^ (0x9e3779b9ULL * (k * cfg.per_class + i + 1)));
            SkeletonSequence s;
            s.label = static_cast<std::int32_t>(k);
            s.subject = static_cast<std::int32_t>(i % cfg.subjects);
            s.joints = cfg.joints;
            s.frames = cfg.frames;
            s.coords.resize(static_cast<std::size_t>(cfg.joints) * cfg.frames * 3);
            for (std::uint32_t f = 0; f < cfg.frames; ++f) {
                const double t = cfg.frames > 1 ? static_cast<double>(f) / (cfg.frames - 1) : 0.0;
                for (std::uint32_t j = 0; j < cfg.joints; ++j) {
                    const auto& tp = templates[k][j];
                    std::array<double, 3> p;
                    for (int d = 0; d < 3; ++d) {
                        double v = tp.base[d] +
                                   tp.amp[d] * std::sin(2.0 * std::numbers::pi * tp.freq[d] * t + tp.phase[d]) +
                                   cfg.noise * rng.normal();
                        p[d] = std::clamp(v, -1.0, 1.0);
                    }
                    s.set(f, j, p);
                }
            }
            if (cfg.score_dim > 0) {
                Channel ch;
                ch.dim = cfg.score_dim;
                ch.values.resize(static_cast<std::size_t>(cfg.score_dim) * cfg.frames);
                for (std::uint32_t f = 0; f < cfg.frames; ++f) {
                    const double t = cfg.frames > 1 ? static_cast<double>(f) / (cfg.frames - 1) : 0.0;
                    for (std::uint32_t w = 0; w < cfg.score_dim; ++w) {
                        const double v =
                            0.8 * std::sin(2.0 * std::numbers::pi * (k + 1.0) * t + 1.7 * w) +
                            0.2 * (w == k % cfg.score_dim ? 1.0 : 0.0) + cfg.noise * rng.normal();
                        ch.values[static_cast<std::size_t>(f) * cfg.score_dim + w] = std::max(0.0, v);
                    }
                }
                s.channels.push_back(std::move(ch));
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

inline constexpr char descriptor_magic[4] = {'T', 'A', 'K', 'D'};
inline constexpr std::uint16_t descriptor_version = 1;

/// Descriptor file: magic "TAKD", u16 version, u16 kernel kind, u64 config
/// hash, u32 joint count, u32 descriptor length, u32 record count, then per
/// record i32 label, i32 subject and float32 values. Everything
/// little-endian.
inline void save_descriptors(const std::string& path, const std::vector<Descriptor>& descs) {
    if (descs.empty()) throw io_error("save_descriptors: empty set");
    const std::size_t len = descs.front().values.size();
    for (const auto& d : descs)
        if (d.values.size() != len || d.kind != descs.front().kind)
            throw io_error("save_descriptors: heterogeneous descriptors");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("cannot open for write: " + path);
    os.write(descriptor_magic, 4);
    binio::write_le<std::uint16_t>(os, descriptor_version);
    binio::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(descs.front().kind));
    binio::write_le<std::uint64_t>(os, descs.front().config_hash);
    binio::write_le<std::uint32_t>(os, descs.front().joint_count);
    binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(len));
    binio::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(descs.size()));
    for (const auto& d : descs) {
        binio::write_le<std::int32_t>(os, d.label);
        binio::write_le<std::int32_t>(os, d.subject);
        for (double v : d.values) binio::write_le<float>(os, static_cast<float>(v));
    }
    if (!os) throw io_error("write failed: " + path);
}

inline std::vector<Descriptor> load_descriptors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, descriptor_magic, 4) != 0)
        throw io_error("bad magic (not a descriptor file): " + path);
    const auto version = binio::read_le<std::uint16_t>(is, "version");
    if (version != descriptor_version) throw io_error("unsupported descriptor version");
    const auto kind = static_cast<KernelKind>(binio::read_le<std::uint16_t>(is, "kind"));
    const auto hash = binio::read_le<std::uint64_t>(is, "config hash");
    const auto joints = binio::read_le<std::uint32_t>(is, "joint count");
    const auto len = binio::read_le<std::uint32_t>(is, "length");
    const auto count = binio::read_le<std::uint32_t>(is, "count");
    std::vector<Descriptor> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Descriptor d;
        d.kind = kind;
        d.config_hash = hash;
        d.joint_count = joints;
        d.label = binio::read_le<std::int32_t>(is, "label");
        d.subject = binio::read_le<std::int32_t>(is, "subject");
        d.values.resize(len);
        for (auto& v : d.values) v = binio::read_le<float>(is, "value");
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace takd
