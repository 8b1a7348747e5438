#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "takd/config.hpp"
#include "takd/dataio.hpp"
#include "takd/dck.hpp"
#include "takd/epn.hpp"
#include "takd/error.hpp"
#include "takd/parallel.hpp"
#include "takd/rng.hpp"
#include "takd/sck.hpp"
#include "takd/svm.hpp"

namespace {

using namespace takd;
using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out;
    unsigned workers = 0;
    bool workers_set = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("--config", a.config_path, "configuration file (JSON)");
    cmd->add_option("--set", a.sets, "override a config key, e.g. --set svm.c=0.1")
        ->allow_extra_args(false);
    cmd->add_option("--out", a.out, "output path");
    cmd->add_option("--workers", a.workers, "worker threads (0 = all cores)")
        ->each([&a](const std::string&) { a.workers_set = true; });
    cmd->add_option("--seed", a.seed, "random seed")
        ->each([&a](const std::string&) { a.seed_set = true; });
}

unsigned effective_workers(const RunConfig& rc) {
    return rc.workers == 0 ? default_workers() : rc.workers;
}

void emit_report(const json& rep, const std::string& out_path) {
    std::cout << rep.dump() << "\n";
    if (!out_path.empty()) {
        std::ofstream os(out_path, std::ios::binary);
        if (!os) throw io_error("cannot open '" + out_path + "' for writing");
        os << rep.dump(2) << "\n";
    }
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SkeletonSequence random_sequence(Rng& rng, std::uint32_t joints, std::uint32_t frames) {
    SkeletonSequence s;
    s.joints = joints;
    s.frames = frames;
    s.coords.resize(static_cast<std::size_t>(joints) * frames * 3);
    for (auto& v : s.coords) v = rng.uniform(-1.0, 1.0);
    return s;
}

int cmd_synth(const RunConfig& rc, const CommonArgs& a) {
    if (a.out.empty()) throw config_error("synth: --out is required");
    const auto data = synth_dataset(rc.synth);
    save_sequences(a.out, data);
    std::cerr << "wrote " << data.size() << " sequences (" << rc.synth.classes << " classes) to "
              << a.out << "\n";
    emit_report({{"command", "synth"},
                 {"records", data.size()},
                 {"classes", rc.synth.classes},
                 {"seed", rc.seed},
                 {"out", a.out}},
                "");
    return 0;
}

std::vector<SkeletonSequence> load_and_preprocess(const RunConfig& rc, const std::string& path) {
    auto data = load_sequences(path);
    for (auto& s : data) {
        if (rc.hip_center) s = hip_center(s, rc.hip_index);
        if (rc.rectify) s = rectify_scores(s);
    }
    if (!rc.parents.empty()) {
        const auto ref = median_bone_lengths(data, rc.parents);
        for (auto& s : data) s = limb_normalize(s, rc.parents, ref);
    }
    return data;
}

int cmd_encode(const RunConfig& rc, const CommonArgs& a, const std::string& in_path) {
    if (a.out.empty()) throw config_error("encode: --out is required");
    const auto data = load_and_preprocess(rc, in_path);
    if (data.empty()) throw io_error("encode: '" + in_path + "' holds no sequences");

    std::size_t out_of_domain = 0;
    for (const auto& s : data)
        for (double v : s.coords)
            if (v < -1.0 || v > 1.0) ++out_of_domain;
    if (out_of_domain > 0)
        std::cerr << "warning: " << out_of_domain
                  << " coordinate values fall outside [-1,1]; spatial pivot grids cover [-1,1]\n";

    std::vector<Descriptor> descs(data.size());
    std::atomic<std::size_t> done{0};
    const std::size_t step = std::max<std::size_t>(1, data.size() / 10);
    parallel_for(data.size(), effective_workers(rc), [&](std::size_t i) {
        try {
            descs[i] = encode_sequence(rc, data[i]);
        } catch (const numeric_error& e) {
            throw numeric_error("sequence " + std::to_string(i) + ": " + e.what());
        }
        const auto k = ++done;
        if (k % step == 0 || k == data.size())
            std::cerr << "encoded " << k << "/" << data.size() << "\n";
    });

    save_descriptors(a.out, descs);
    emit_report({{"command", "encode"},
                 {"sequences", data.size()},
                 {"kind", kernel_kind_name(descs[0].kind)},
                 {"length", descs[0].values.size()},
                 {"config_hash", rc.hash},
                 {"out", a.out}},
                "");
    return 0;
}

json check_entry(const std::string& name, double value, double threshold, bool pass) {
    return {{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", pass}};
}

int cmd_verify(const RunConfig& rc, const CommonArgs& a) {
    Rng rng(rc.seed);
    SckConfig sck = make_sck_config(5, 4);
    sck.epn.mode = EpnMode::none;
    DckConfig dck = make_dck_config(5, 4);
    dck.epn.mode = EpnMode::none;

    double sck_err = 0.0;
    double dck_err = 0.0;
    for (std::uint32_t p = 0; p < rc.verify.pairs; ++p) {
        const auto A = random_sequence(rng, 3, 5);
        const auto B = random_sequence(rng, 3, 5);
        {
            const double exact = exact_sck(A, B, sck, true);
            const double lin = dot(sck_descriptor(A, sck).values, sck_descriptor(B, sck).values);
            sck_err = std::max(sck_err, std::abs(lin - exact) / std::max(std::abs(exact), 1e-300));
        }
        {
            const double exact = exact_dck(A, B, dck, true);
            const double lin = dot(dck_descriptor(A, dck).values, dck_descriptor(B, dck).values);
            dck_err = std::max(dck_err, std::abs(lin - exact) / std::max(std::abs(exact), 1e-300));
        }
    }

    const std::uint32_t n = std::max<std::uint32_t>(rc.verify.sequences, 2);
    std::vector<SkeletonSequence> seqs;
    for (std::uint32_t i = 0; i < n; ++i) seqs.push_back(random_sequence(rng, 3, 5));
    DenseTensor gram_s({n, n});
    DenseTensor gram_d({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double ks = exact_sck(seqs[i], seqs[j], sck, false);
            const double kd = exact_dck(seqs[i], seqs[j], dck, false);
            gram_s[i + j * n] = gram_s[j + i * n] = ks;
            gram_d[i + j * n] = gram_d[j + i * n] = kd;
        }
    const double min_eig_s = sym_min_eig(gram_s);
    const double min_eig_d = sym_min_eig(gram_d);

    const auto base = sck_joint_tensor(seqs[0], 0, sck);
    EpnConfig slice_id;
    slice_id.mode = EpnMode::slice;
    slice_id.gamma = 1.0;
    EpnConfig hosvd_id;
    hosvd_id.mode = EpnMode::hosvd;
    hosvd_id.gamma = 1.0;
    hosvd_id.gamma_star = 1.0;
    const auto rt_slice = tensor_epn(base, slice_id);
    const auto rt_hosvd = tensor_epn(base, hosvd_id);
    DenseTensor diff_s = base;
    DenseTensor diff_h = base;
    for (std::size_t i = 0; i < base.size(); ++i) {
        diff_s[i] -= rt_slice[i];
        diff_h[i] -= rt_hosvd[i];
    }
    const double slice_rt = diff_s.frobenius() / std::max(base.frobenius(), 1e-300);
    const double hosvd_rt = diff_h.frobenius() / std::max(base.frobenius(), 1e-300);

    double rbf_err[3] = {0.0, 0.0, 0.0};
    const int zs[3] = {3, 11, 20};
    for (int g = 0; g < 3; ++g) {
        const auto grid = make_grid(zs[g], -1.0, 1.0, 0.5);
        Rng r2(rc.seed + 1);
        for (int p = 0; p < 1000; ++p) {
            const double u = r2.uniform(-1.0, 1.0);
            const double v = r2.uniform(-1.0, 1.0);
            const auto fu = embed_scalar(u, grid);
            const auto fv = embed_scalar(v, grid);
            const double approx = std::inner_product(fu.begin(), fu.end(), fv.begin(), 0.0);
            rbf_err[g] = std::max(rbf_err[g], std::abs(approx - rbf(u, v, 0.5)));
        }
    }

    json checks = json::array();
    checks.push_back(check_entry("sck_linearization_identity", sck_err, 1e-9, sck_err <= 1e-9));
    checks.push_back(check_entry("dck_linearization_identity", dck_err, 1e-8, dck_err <= 1e-8));
    checks.push_back(check_entry("sck_gram_min_eigenvalue", min_eig_s, -1e-8, min_eig_s >= -1e-8));
    checks.push_back(check_entry("dck_gram_min_eigenvalue", min_eig_d, -1e-8, min_eig_d >= -1e-8));
    checks.push_back(check_entry("slice_epn_gamma1_identity", slice_rt, 1e-10, slice_rt <= 1e-10));
    checks.push_back(check_entry("hosvd_epn_gamma1_identity", hosvd_rt, 1e-10, hosvd_rt <= 1e-10));
    json rbf_check = check_entry("rbf_truncation_error_z20_vs_z3", rbf_err[2], rbf_err[0],
                                 rbf_err[2] < rbf_err[0]);
    rbf_check["z3"] = rbf_err[0];
    rbf_check["z11"] = rbf_err[1];
    rbf_check["z20"] = rbf_err[2];
    checks.push_back(rbf_check);

    bool all = true;
    for (const auto& c : checks) {
        all = all && c.at("pass").get<bool>();
        std::cerr << (c.at("pass").get<bool>() ? "ok   " : "FAIL ") << c.at("name").get<std::string>()
                  << "  value=" << c.at("value").get<double>() << "\n";
    }
    emit_report({{"command", "verify"}, {"checks", checks}, {"pass", all}}, a.out);
    if (!all) throw numeric_error("verification checks failed");
    return 0;
}

int cmd_train(const RunConfig& rc, const CommonArgs& a, const std::string& in_path) {
    if (a.out.empty()) throw config_error("train: --out is required");
    const auto descs = load_descriptors(in_path);
    const auto model = train_svm(descs, rc.svm);
    save_model(a.out, model);
    const double acc = accuracy(model, descs);
    std::cerr << "trained " << model.labels.size() << "-class model on " << descs.size()
              << " descriptors (dim " << model.dim << "), train accuracy " << acc << "\n";
    emit_report({{"command", "train"},
                 {"count", descs.size()},
                 {"classes", model.labels.size()},
                 {"dim", model.dim},
                 {"train_accuracy", acc},
                 {"out", a.out}},
                "");
    return 0;
}

double mean_average_precision(const LinearModel& m, const std::vector<Descriptor>& data) {
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t k = 0; k < m.labels.size(); ++k) {
        std::vector<std::pair<double, bool>> ranked;
        std::size_t positives = 0;
        for (const auto& d : data) {
            const bool pos = d.label == m.labels[k];
            positives += pos ? 1 : 0;
            ranked.emplace_back(svm_scores(m, d.values)[k], pos);
        }
        if (positives == 0) continue;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& x, const auto& y) { return x.first > y.first; });
        double hits = 0.0;
        double ap = 0.0;
        for (std::size_t i = 0; i < ranked.size(); ++i)
            if (ranked[i].second) {
                hits += 1.0;
                ap += hits / static_cast<double>(i + 1);
            }
        sum += ap / static_cast<double>(positives);
        ++counted;
    }
    if (counted == 0) throw config_error("eval: no class of the model appears in the data");
    return sum / static_cast<double>(counted);
}

int cmd_eval(const RunConfig& rc, const CommonArgs& a, const std::string& model_path,
             const std::string& in_path) {
    const auto model = load_model(model_path);
    const auto descs = load_descriptors(in_path);
    const double acc = accuracy(model, descs);

    json per_class = json::object();
    for (const auto label : model.labels) {
        std::size_t total = 0;
        std::size_t correct = 0;
        for (const auto& d : descs)
            if (d.label == label) {
                ++total;
                correct += predict(model, d.values) == label ? 1 : 0;
            }
        if (total > 0)
            per_class[std::to_string(label)] = static_cast<double>(correct) / static_cast<double>(total);
    }

    json rep = {{"command", "eval"}, {"count", descs.size()}, {"accuracy", acc},
                {"per_class", per_class}};
    if (rc.eval_map) rep["map"] = mean_average_precision(model, descs);
    std::cerr << "accuracy " << acc << " on " << descs.size() << " descriptors\n";
    emit_report(rep, a.out);
    return 0;
}

int cmd_bench(const RunConfig& rc, const CommonArgs& a) {
    SynthConfig sc;
    sc.classes = 4;
    sc.per_class = (rc.bench.sequences + 3) / 4;
    sc.joints = rc.bench.joints;
    sc.frames = rc.bench.frames;
    sc.seed = rc.seed;
    auto data = synth_dataset(sc);
    data.resize(rc.bench.sequences);

    SckConfig sck = rc.sck;
    auto t0 = std::chrono::steady_clock::now();
    double checksum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = i; j < data.size(); ++j) checksum += exact_sck(data[i], data[j], sck, false);
    const double sck_exact_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    std::vector<Descriptor> descs(data.size());
    parallel_for(data.size(), effective_workers(rc),
                 [&](std::size_t i) { descs[i] = sck_descriptor(data[i], sck); });
    double lin_checksum = 0.0;
    for (std::size_t i = 0; i < descs.size(); ++i)
        for (std::size_t j = i; j < descs.size(); ++j) lin_checksum += dot(descs[i].values, descs[j].values);
    const double sck_lin_s = seconds_since(t0);

    SynthConfig dc;
    dc.classes = 2;
    dc.per_class = (rc.bench.dck_sequences + 1) / 2;
    dc.joints = rc.bench.dck_joints;
    dc.frames = rc.bench.dck_frames;
    dc.seed = rc.seed;
    auto ddata = synth_dataset(dc);
    ddata.resize(rc.bench.dck_sequences);

    DckConfig dck = rc.dck;
    t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < ddata.size(); ++i)
        for (std::size_t j = i; j < ddata.size(); ++j) checksum += exact_dck(ddata[i], ddata[j], dck, false);
    const double dck_exact_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    std::vector<Descriptor> ddescs(ddata.size());
    parallel_for(ddata.size(), effective_workers(rc),
                 [&](std::size_t i) { ddescs[i] = dck_descriptor(ddata[i], dck); });
    for (std::size_t i = 0; i < ddescs.size(); ++i)
        for (std::size_t j = i; j < ddescs.size(); ++j)
            lin_checksum += dot(ddescs[i].values, ddescs[j].values);
    const double dck_lin_s = seconds_since(t0);

    const double sck_ratio = sck_exact_s / std::max(sck_lin_s, 1e-9);
    const double dck_ratio = dck_exact_s / std::max(dck_lin_s, 1e-9);
    std::cerr << "sck: exact " << sck_exact_s << " s, linearized " << sck_lin_s << " s, ratio "
              << sck_ratio << "\n";
    std::cerr << "dck: exact " << dck_exact_s << " s, linearized " << dck_lin_s << " s, ratio "
              << dck_ratio << "\n";
    emit_report({{"command", "bench"},
                 {"sck",
                  {{"sequences", rc.bench.sequences}, {"frames", rc.bench.frames},
                   {"joints", rc.bench.joints}, {"exact_seconds", sck_exact_s},
                   {"linearized_seconds", sck_lin_s}, {"ratio", sck_ratio}}},
                 {"dck",
                  {{"sequences", rc.bench.dck_sequences}, {"frames", rc.bench.dck_frames},
                   {"joints", rc.bench.dck_joints}, {"exact_seconds", dck_exact_s},
                   {"linearized_seconds", dck_lin_s}, {"ratio", dck_ratio}}},
                 {"checksum", checksum + lin_checksum}},
                a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensor descriptors for multivariate motion sequences"};
    app.require_subcommand(1);
    CommonArgs a;
    std::string in_path;
    std::string model_path;

    auto* synth = app.add_subcommand("synth", "generate a labelled synthetic dataset");
    auto* encode = app.add_subcommand("encode", "encode sequences into descriptors");
    encode->add_option("input", in_path, "sequence dataset (JSON lines)")->required();
    auto* verify = app.add_subcommand("verify", "run numeric self-checks");
    auto* train = app.add_subcommand("train", "train a linear classifier on descriptors");
    train->add_option("input", in_path, "descriptor file")->required();
    auto* eval = app.add_subcommand("eval", "evaluate a trained model on descriptors");
    eval->add_option("model", model_path, "model file")->required();
    eval->add_option("input", in_path, "descriptor file")->required();
    auto* bench = app.add_subcommand("bench", "time exact kernels against the linearized pipeline");
    for (auto* cmd : {synth, encode, verify, train, eval, bench}) add_common(cmd, a);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        nlohmann::json doc = load_config_json(a.config_path, a.sets);
        if (a.seed_set) apply_override(doc, "seed=" + std::to_string(a.seed));
        if (a.workers_set) apply_override(doc, "workers=" + std::to_string(a.workers));
        const RunConfig rc = parse_run_config(doc);
        if (app.got_subcommand(synth)) return cmd_synth(rc, a);
        if (app.got_subcommand(encode)) return cmd_encode(rc, a, in_path);
        if (app.got_subcommand(verify)) return cmd_verify(rc, a);
        if (app.got_subcommand(train)) return cmd_train(rc, a, in_path);
        if (app.got_subcommand(eval)) return cmd_eval(rc, a, model_path, in_path);
        if (app.got_subcommand(bench)) return cmd_bench(rc, a);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
