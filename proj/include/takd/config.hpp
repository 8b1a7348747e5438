#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "takd/binio.hpp"
#include "takd/dataio.hpp"
#include "takd/dck.hpp"
#include "takd/error.hpp"
#include "takd/sck.hpp"
#include "takd/svm.hpp"

namespace takd {

/// Schema of the run configuration document. Every key that may appear in a
/// user config (or a --set override) is present here with its default value;
/// anything else is rejected.
inline nlohmann::json default_config_json() {
    nlohmann::json epn_slice = {{"mode", "slice"}, {"fn", "gamma"}, {"gamma", 0.36},
                                {"gamma_star", 1.0}, {"eta", 0.0}};
    nlohmann::json epn_hosvd = {{"mode", "hosvd"}, {"fn", "gamma"}, {"gamma", 0.85},
                                {"gamma_star", 1.0}, {"eta", 0.0}};
    nlohmann::json epn_none = {{"mode", "none"}, {"fn", "gamma"}, {"gamma", 0.36},
                               {"gamma_star", 1.0}, {"eta", 0.0}};
    nlohmann::json dck_base = {{"z2", 5},          {"z3", 6},           {"sigma2", 0.6},
                               {"sigma3", 0.5},    {"sigma4", 1.0},     {"disp_scale", 2.0},
                               {"use_velocity", true}, {"half_pairs", false},
                               {"joint_subset", nlohmann::json::array()}, {"epn", epn_none}};
    return {
        {"kernel", "sck"},
        {"seed", 42},
        {"workers", 0},
        {"synth",
         {{"classes", 4}, {"per_class", 30}, {"joints", 8}, {"frames", 40}, {"subjects", 10},
          {"noise", 0.05}, {"score_dim", 0}}},
        {"preprocess",
         {{"hip_center", false}, {"hip_index", 0}, {"rectify_scores", false},
          {"parents", nlohmann::json::array()}}},
        {"sck",
         {{"z2", 5}, {"z3", 6}, {"sigma2", 0.6}, {"sigma3", 0.5}, {"beta1", 0.5}, {"beta2", 0.5},
          {"order", 3}, {"epn", epn_slice}}},
        {"dck",
         {{"z2", 5}, {"z3", 6}, {"sigma2", 0.6}, {"sigma3", 0.5}, {"sigma4", 1.0},
          {"disp_scale", 2.0}, {"use_velocity", false}, {"half_pairs", false},
          {"joint_subset", nlohmann::json::array()}, {"epn", epn_hosvd}}},
        {"sck_plus",
         {{"z2", 5}, {"z3", 5}, {"z4", 5}, {"z5", 3}, {"sigma2", 0.6}, {"sigma_t", 0.5},
          {"joint_weight", 0.25}, {"score_weights", nlohmann::json::array()},
          {"beta2", 0.25}, {"beta3", 0.25}, {"beta4", 0.25},
          {"scheme", {{"min_len", 6}, {"step", 2}, {"max_len", 24}, {"stride", 1}}},
          {"order", 3}, {"epn", epn_slice}}},
        {"dck_plus",
         {{"base", dck_base}, {"tau", 4}, {"stride", 1}, {"z6", 4}, {"sigma_pos", 0.5},
          {"epn", epn_hosvd}}},
        {"svm", {{"c", 0.01}, {"epochs", 200}, {"normalize", true}}},
        {"fusion", {{"first", "sck"}, {"second", "dck"}, {"weight", 0.5}}},
        {"eval", {{"map", false}}},
        {"verify", {{"sequences", 5}, {"pairs", 10}}},
        {"bench",
         {{"sequences", 200}, {"frames", 50}, {"joints", 8},
          {"dck_sequences", 10}, {"dck_joints", 3}, {"dck_frames", 20}}},
    };
}

namespace detail {

inline std::string json_kind(const nlohmann::json& v) {
    if (v.is_boolean()) return "boolean";
    if (v.is_string()) return "string";
    if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
    if (v.is_number_float()) return "number";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return "null";
}

/// Overwrites one schema slot with a user value, enforcing the slot's type.
/// Integers may widen to number slots; arrays must hold numbers only.
inline void assign_checked(nlohmann::json& slot, const nlohmann::json& v, const std::string& key) {
    const std::string want = json_kind(slot);
    std::string got = json_kind(v);
    if (want == "number" && got == "integer") got = "number";
    if (want != got)
        throw config_error("config: key '" + key + "' expects " + want + ", got " + got);
    if (v.is_array())
        for (const auto& e : v)
            if (!e.is_number())
                throw config_error("config: key '" + key + "' must be an array of numbers");
    slot = v;
}

inline void merge_config(nlohmann::json& base, const nlohmann::json& user, const std::string& path) {
    if (!user.is_object())
        throw config_error("config: expected an object at '" + (path.empty() ? std::string("<root>") : path) + "'");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        const auto slot = base.find(it.key());
        if (slot == base.end()) throw config_error("config: unknown key '" + key + "'");
        if (slot->is_object())
            merge_config(*slot, it.value(), key);
        else
            assign_checked(*slot, it.value(), key);
    }
}

}  // namespace detail

/// Applies one "dotted.key=value" override. The key must exist in the
/// schema; the value is parsed as JSON, falling back to a plain string.
inline void apply_override(nlohmann::json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw config_error("--set expects key=value, got '" + std::string(assignment) + "'");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));

    nlohmann::json* node = &doc;
    std::size_t pos = 0;
    std::string walked;
    while (true) {
        const auto dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        walked = walked.empty() ? part : walked + "." + part;
        if (!node->is_object() || node->find(part) == node->end())
            throw config_error("config: unknown key '" + walked + "'");
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    if (node->is_object())
        throw config_error("config: key '" + key + "' is a section, not a settable value");

    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    detail::assign_checked(*node, value, key);
}

inline nlohmann::json parse_config_text(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
}

/// Defaults, overlaid with an optional config file, then --set overrides in
/// order. Unknown keys and type mismatches fail loudly.
inline nlohmann::json load_config_json(const std::string& path,
                                       std::span<const std::string> overrides = {}) {
    nlohmann::json doc = default_config_json();
    if (!path.empty()) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw io_error("config: cannot open '" + path + "'");
        std::ostringstream ss;
        ss << is.rdbuf();
        detail::merge_config(doc, parse_config_text(ss.str()), "");
    }
    for (const auto& kv : overrides) apply_override(doc, kv);
    return doc;
}

/// Hash of the canonical (sorted-key) serialization; stored in descriptor
/// headers so mismatched descriptor sets are detectable.
inline std::uint64_t config_hash(const nlohmann::json& doc) { return binio::fnv1a(doc.dump()); }

/// Provenance hash over the keys that determine descriptor bytes: kernel
/// selection, kernel parameters, preprocessing and fusion. Runtime knobs
/// (workers, seed, svm, report settings) do not change it.
inline std::uint64_t descriptor_config_hash(const nlohmann::json& doc) {
    nlohmann::json sub;
    for (const char* key : {"kernel", "preprocess", "sck", "dck", "sck_plus", "dck_plus", "fusion"})
        sub[key] = doc.at(key);
    return config_hash(sub);
}

inline KernelKind parse_kernel_kind(const std::string& s) {
    if (s == "sck") return KernelKind::sck;
    if (s == "dck") return KernelKind::dck;
    if (s == "sck_plus") return KernelKind::sck_plus;
    if (s == "dck_plus") return KernelKind::dck_plus;
    if (s == "fused") return KernelKind::fused;
    throw config_error("config: kernel must be sck|dck|sck_plus|dck_plus|fused, got '" + s + "'");
}

namespace detail {

inline double cfg_num(const nlohmann::json& j) { return j.get<double>(); }

inline std::int64_t cfg_int(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw config_error("config: key '" + key + "' expects integer");
    return j.get<std::int64_t>();
}

inline std::uint32_t cfg_u32(const nlohmann::json& j, const std::string& key) {
    const auto v = cfg_int(j, key);
    if (v < 0) throw config_error("config: key '" + key + "' must be nonnegative");
    return static_cast<std::uint32_t>(v);
}

inline EpnConfig parse_epn(const nlohmann::json& e, const std::string& key) {
    EpnConfig c;
    const std::string mode = e.at("mode").get<std::string>();
    if (mode == "none")
        c.mode = EpnMode::none;
    else if (mode == "slice")
        c.mode = EpnMode::slice;
    else if (mode == "hosvd")
        c.mode = EpnMode::hosvd;
    else
        throw config_error("config: key '" + key + ".mode' must be none|slice|hosvd, got '" + mode + "'");
    const std::string fn = e.at("fn").get<std::string>();
    if (fn == "gamma")
        c.fn = SpectralFn::gamma;
    else if (fn == "maxexp")
        c.fn = SpectralFn::maxexp;
    else
        throw config_error("config: key '" + key + ".fn' must be gamma|maxexp, got '" + fn + "'");
    c.gamma = cfg_num(e.at("gamma"));
    c.gamma_star = cfg_num(e.at("gamma_star"));
    c.eta = cfg_num(e.at("eta"));
    return c;
}

inline std::vector<std::uint32_t> parse_index_list(const nlohmann::json& a, const std::string& key) {
    std::vector<std::uint32_t> out;
    for (const auto& e : a) out.push_back(cfg_u32(e, key));
    return out;
}

inline std::vector<std::int32_t> parse_parent_list(const nlohmann::json& a, const std::string& key) {
    std::vector<std::int32_t> out;
    for (const auto& e : a) out.push_back(static_cast<std::int32_t>(cfg_int(e, key)));
    return out;
}

inline DckConfig parse_dck_section(const nlohmann::json& d, const std::string& key) {
    DckConfig c;
    c.disp_grid = make_grid(static_cast<int>(cfg_int(d.at("z2"), key + ".z2")), -1.0, 1.0,
                            cfg_num(d.at("sigma2")));
    c.time_grid = make_grid(static_cast<int>(cfg_int(d.at("z3"), key + ".z3")), 0.0, 1.0,
                            cfg_num(d.at("sigma3")));
    c.sigma4 = cfg_num(d.at("sigma4"));
    c.disp_scale = cfg_num(d.at("disp_scale"));
    c.use_velocity = d.at("use_velocity").get<bool>();
    c.half_pairs = d.at("half_pairs").get<bool>();
    c.joint_subset = parse_index_list(d.at("joint_subset"), key + ".joint_subset");
    c.epn = parse_epn(d.at("epn"), key + ".epn");
    validate(c);
    return c;
}

}  // namespace detail

struct VerifySettings {
    std::uint32_t sequences = 5;
    std::uint32_t pairs = 10;
};

struct BenchSettings {
    std::uint32_t sequences = 200;
    std::uint32_t frames = 50;
    std::uint32_t joints = 8;
    std::uint32_t dck_sequences = 10;
    std::uint32_t dck_joints = 3;
    std::uint32_t dck_frames = 20;
};

/// Fully parsed, validated run configuration: the effective document plus
/// typed kernel/classifier settings derived from it.
struct RunConfig {
    nlohmann::json doc;
    std::uint64_t hash = 0;
    KernelKind kernel = KernelKind::sck;
    std::uint64_t seed = 42;
    std::uint32_t workers = 0;
    SynthConfig synth;
    bool hip_center = false;
    std::uint32_t hip_index = 0;
    bool rectify = false;
    std::vector<std::int32_t> parents;
    SckConfig sck;
    DckConfig dck;
    SckPlusConfig sck_plus;
    DckPlusConfig dck_plus;
    SvmOptions svm;
    KernelKind fusion_first = KernelKind::sck;
    KernelKind fusion_second = KernelKind::dck;
    double fusion_weight = 0.5;
    bool eval_map = false;
    VerifySettings verify;
    BenchSettings bench;
};

inline RunConfig parse_run_config(const nlohmann::json& doc) {
    using detail::cfg_num;
    using detail::cfg_u32;
    RunConfig rc;
    rc.doc = doc;
    rc.hash = descriptor_config_hash(doc);
    rc.kernel = parse_kernel_kind(doc.at("kernel").get<std::string>());
    rc.seed = static_cast<std::uint64_t>(detail::cfg_int(doc.at("seed"), "seed"));
    rc.workers = cfg_u32(doc.at("workers"), "workers");

    const auto& sy = doc.at("synth");
    rc.synth.classes = cfg_u32(sy.at("classes"), "synth.classes");
    rc.synth.per_class = cfg_u32(sy.at("per_class"), "synth.per_class");
    rc.synth.joints = cfg_u32(sy.at("joints"), "synth.joints");
    rc.synth.frames = cfg_u32(sy.at("frames"), "synth.frames");
    rc.synth.subjects = cfg_u32(sy.at("subjects"), "synth.subjects");
    rc.synth.noise = cfg_num(sy.at("noise"));
    rc.synth.score_dim = cfg_u32(sy.at("score_dim"), "synth.score_dim");
    rc.synth.seed = rc.seed;

    const auto& pp = doc.at("preprocess");
    rc.hip_center = pp.at("hip_center").get<bool>();
    rc.hip_index = cfg_u32(pp.at("hip_index"), "preprocess.hip_index");
    rc.rectify = pp.at("rectify_scores").get<bool>();
    rc.parents = detail::parse_parent_list(pp.at("parents"), "preprocess.parents");

    const auto& sk = doc.at("sck");
    rc.sck = make_sck_config(static_cast<int>(detail::cfg_int(sk.at("z2"), "sck.z2")),
                             static_cast<int>(detail::cfg_int(sk.at("z3"), "sck.z3")),
                             cfg_num(sk.at("sigma2")), cfg_num(sk.at("sigma3")),
                             cfg_num(sk.at("beta1")), cfg_num(sk.at("beta2")),
                             cfg_u32(sk.at("order"), "sck.order"));
    rc.sck.epn = detail::parse_epn(sk.at("epn"), "sck.epn");

    rc.dck = detail::parse_dck_section(doc.at("dck"), "dck");

    const auto& sp = doc.at("sck_plus");
    {
        SckPlusConfig c;
        ChannelConfig joints;
        joints.kind = ChannelKind::joint_rbf;
        joints.weight = cfg_num(sp.at("joint_weight"));
        joints.grid = make_grid(static_cast<int>(detail::cfg_int(sp.at("z2"), "sck_plus.z2")), -1.0,
                                1.0, cfg_num(sp.at("sigma2")));
        c.channels.push_back(joints);
        const auto& sw = sp.at("score_weights");
        for (std::size_t i = 0; i < sw.size(); ++i) {
            if (!sw[i].is_number())
                throw config_error("config: key 'sck_plus.score_weights' must be an array of numbers");
            ChannelConfig ch;
            ch.kind = ChannelKind::score_linear;
            ch.weight = sw[i].get<double>();
            ch.score_index = static_cast<std::uint32_t>(i);
            c.channels.push_back(ch);
        }
        const double sigma_t = cfg_num(sp.at("sigma_t"));
        c.frame_grid = make_grid(static_cast<int>(detail::cfg_int(sp.at("z3"), "sck_plus.z3")), 0.0,
                                 1.0, sigma_t);
        c.pos_grid = make_grid(static_cast<int>(detail::cfg_int(sp.at("z4"), "sck_plus.z4")), 0.0,
                               1.0, sigma_t);
        c.len_grid = make_grid(static_cast<int>(detail::cfg_int(sp.at("z5"), "sck_plus.z5")), 0.0,
                               1.0, sigma_t);
        c.beta2 = cfg_num(sp.at("beta2"));
        c.beta3 = cfg_num(sp.at("beta3"));
        c.beta4 = cfg_num(sp.at("beta4"));
        const auto& sch = sp.at("scheme");
        c.scheme = make_scheme(cfg_u32(sch.at("min_len"), "sck_plus.scheme.min_len"),
                               cfg_u32(sch.at("step"), "sck_plus.scheme.step"),
                               cfg_u32(sch.at("max_len"), "sck_plus.scheme.max_len"),
                               cfg_u32(sch.at("stride"), "sck_plus.scheme.stride"));
        c.order = cfg_u32(sp.at("order"), "sck_plus.order");
        c.epn = detail::parse_epn(sp.at("epn"), "sck_plus.epn");
        validate(c);
        rc.sck_plus = std::move(c);
    }

    const auto& dp = doc.at("dck_plus");
    rc.dck_plus.base = detail::parse_dck_section(dp.at("base"), "dck_plus.base");
    rc.dck_plus.tau = cfg_u32(dp.at("tau"), "dck_plus.tau");
    rc.dck_plus.stride = cfg_u32(dp.at("stride"), "dck_plus.stride");
    rc.dck_plus.pos_grid = make_grid(static_cast<int>(detail::cfg_int(dp.at("z6"), "dck_plus.z6")),
                                     0.0, 1.0, cfg_num(dp.at("sigma_pos")));
    rc.dck_plus.epn = detail::parse_epn(dp.at("epn"), "dck_plus.epn");
    validate(rc.dck_plus);

    const auto& sv = doc.at("svm");
    rc.svm.C = cfg_num(sv.at("c"));
    rc.svm.epochs = cfg_u32(sv.at("epochs"), "svm.epochs");
    rc.svm.normalize = sv.at("normalize").get<bool>();
    rc.svm.seed = rc.seed;

    const auto& fu = doc.at("fusion");
    rc.fusion_first = parse_kernel_kind(fu.at("first").get<std::string>());
    rc.fusion_second = parse_kernel_kind(fu.at("second").get<std::string>());
    if (rc.fusion_first == KernelKind::fused || rc.fusion_second == KernelKind::fused)
        throw config_error("config: fusion components must be base kernels");
    rc.fusion_weight = cfg_num(fu.at("weight"));
    if (rc.fusion_weight < 0.0 || rc.fusion_weight > 1.0)
        throw config_error("config: key 'fusion.weight' must be in [0, 1]");

    rc.eval_map = doc.at("eval").at("map").get<bool>();

    const auto& vf = doc.at("verify");
    rc.verify.sequences = cfg_u32(vf.at("sequences"), "verify.sequences");
    rc.verify.pairs = cfg_u32(vf.at("pairs"), "verify.pairs");

    const auto& be = doc.at("bench");
    rc.bench.sequences = cfg_u32(be.at("sequences"), "bench.sequences");
    rc.bench.frames = cfg_u32(be.at("frames"), "bench.frames");
    rc.bench.joints = cfg_u32(be.at("joints"), "bench.joints");
    rc.bench.dck_sequences = cfg_u32(be.at("dck_sequences"), "bench.dck_sequences");
    rc.bench.dck_joints = cfg_u32(be.at("dck_joints"), "bench.dck_joints");
    rc.bench.dck_frames = cfg_u32(be.at("dck_frames"), "bench.dck_frames");

    return rc;
}

inline RunConfig load_run_config(const std::string& path, std::span<const std::string> overrides = {}) {
    return parse_run_config(load_config_json(path, overrides));
}

namespace detail {

inline Descriptor encode_one(const RunConfig& rc, KernelKind kind, const SkeletonSequence& s) {
    switch (kind) {
        case KernelKind::sck:
            return sck_descriptor(s, rc.sck);
        case KernelKind::dck:
            return dck_descriptor(s, rc.dck);
        case KernelKind::sck_plus:
            return sck_plus_descriptor(s, rc.sck_plus);
        case KernelKind::dck_plus:
            return dck_plus_descriptor(s.frames < rc.dck_plus.tau ? loop_pad(s, rc.dck_plus.tau) : s,
                                       rc.dck_plus);
        case KernelKind::fused:
            break;
    }
    throw config_error("encode: fused kernels cannot nest");
}

}  // namespace detail

/// Builds the descriptor selected by the config; "fused" concatenates the
/// two component descriptors with sqrt-weight scaling so linear kernels add.
inline Descriptor encode_sequence(const RunConfig& rc, const SkeletonSequence& s) {
    Descriptor d;
    if (rc.kernel == KernelKind::fused) {
        const Descriptor a = detail::encode_one(rc, rc.fusion_first, s);
        const Descriptor b = detail::encode_one(rc, rc.fusion_second, s);
        d = late_fusion(a, b, rc.fusion_weight);
    } else {
        d = detail::encode_one(rc, rc.kernel, s);
    }
    d.config_hash = rc.hash;
    return d;
}

}  // namespace takd
