// Command line front end: workload generation, index build, ground truth,
// feature harvesting, model training, evaluation sweeps and diagnostics.
//
// Exit codes: 0 ok, 1 bad flags, 2 missing or stale inputs, 3 anything else.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fanns/common.hpp"
#include "fanns/gbdt.hpp"
#include "fanns/graph.hpp"
#include "fanns/io.hpp"
#include "fanns/metrics.hpp"
#include "fanns/pipeline.hpp"
#include "fanns/search.hpp"
#include "fanns/simd/l2.hpp"
#include "fanns/workload.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string now_iso8601() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Manifests record what went in and what came out; downstream commands use
// the recorded output hashes to reject stale or corrupted inputs.
struct Manifest {
    std::string cmd;
    std::map<std::string, std::string> flags;
    std::map<std::string, std::string> input_hashes;
    std::map<std::string, std::string> output_hashes;

    void write(const std::string& path) const {
        json j;
        j["cmd"] = cmd;
        j["version"] = fanns::kVersion;
        j["started_at"] = now_iso8601();
        j["flags"] = flags;
        j["input_hashes"] = input_hashes;
        j["output_hashes"] = output_hashes;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw fanns::IoError("cannot write file: " + path);
        out << j.dump(2) << '\n';
        if (!out) throw fanns::IoError("write failed: " + path);
    }
};

std::optional<std::string> recorded_hash(const std::string& path) {
    const fs::path p(path);
    const std::string key = p.filename().string();
    auto probe = [&](const fs::path& mpath) -> std::optional<std::string> {
        if (!fs::exists(mpath)) return std::nullopt;
        std::ifstream in(mpath, std::ios::binary);
        json j;
        try {
            in >> j;
        } catch (const json::exception&) {
            return std::nullopt;
        }
        if (j.contains("output_hashes") && j["output_hashes"].contains(key))
            return j["output_hashes"][key].get<std::string>();
        return std::nullopt;
    };
    if (auto h = probe(path + ".manifest.json")) return h;
    if (auto h = probe(p.parent_path() / "manifest.json")) return h;
    return std::nullopt;
}

// Hashes an input file, verifying it against its producer's manifest if one
// sits next to it. Throws HashMismatchError for anything worth exit code 2.
std::string take_input(Manifest& m, const std::string& path) {
    if (!fs::exists(path)) throw fanns::HashMismatchError("missing input: " + path);
    const std::string h = fanns::hash_file(path);
    if (const auto want = recorded_hash(path); want && *want != h)
        throw fanns::HashMismatchError("input hash mismatch: " + path + " (expected " + *want +
                                       ", got " + h + ")");
    m.input_hashes[path] = h;
    return h;
}

void record_output(Manifest& m, const std::string& path) {
    m.output_hashes[fs::path(path).filename().string()] = fanns::hash_file(path);
}

fanns::SearchMode parse_mode(const std::string& s) {
    if (s == "post") return fanns::SearchMode::Post;
    if (s == "pre") return fanns::SearchMode::Pre;
    throw CLI::ValidationError("--mode", "must be 'post' or 'pre'");
}

// Config files are JSON: top-level keys for app options, one nested object
// per subcommand. Arrays become repeated option values.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            if (!opt->get_default_str().empty())
                j[opt->get_lnames()[0]] = opt->get_default_str();
            else if (default_also)
                j[opt->get_lnames()[0]] = "";
        }
        for (const CLI::App* sub : app->get_subcommands({}))
            j[sub->get_name()] = json::parse(to_config(sub, default_also, false, ""));
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::FileError(std::string("config parse: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        walk(j, {}, items);
        return items;
    }

  private:
    static void walk(const json& j, std::vector<std::string> parents,
                     std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, val] : j.items()) {
            if (val.is_object()) {
                auto deeper = parents;
                deeper.push_back(key);
                walk(val, deeper, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (val.is_array()) {
                for (const auto& e : val) item.inputs.push_back(scalar(e));
            } else {
                item.inputs.push_back(scalar(val));
            }
            items.push_back(std::move(item));
        }
    }

    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
    }
};

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

struct CommonIn {
    std::string data;
    std::string split = "train";
};

void take_workload_inputs(Manifest& m, const CommonIn& in, bool with_queries) {
    take_input(m, in.data + "/workload.json");
    take_input(m, in.data + "/base.fvecs");
    take_input(m, in.data + "/base.attrs.jsonl");
    if (with_queries) {
        take_input(m, in.data + "/" + in.split + ".fvecs");
        take_input(m, in.data + "/" + in.split + ".filters.jsonl");
    }
}

int run(int argc, char** argv) {
    CLI::App app{"filtered ann search with learned adaptive termination"};
    app.set_version_flag("--version", std::string(fanns::kVersion));
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "read option defaults from a JSON file");
    app.require_subcommand(1);

    // gen-data
    fanns::WorkloadSpec spec;
    std::string out_dir;
    auto* gd = app.add_subcommand("gen-data", "generate a synthetic filtered-search workload");
    gd->add_option("--out", out_dir, "output workload directory")->required();
    gd->add_option("--scheme", spec.scheme,
                   "independent-range|cluster-range|anti-range|mixed-range|"
                   "independent-labels|cluster-labels");
    gd->add_option("--n", spec.base_n, "indexed corpus size");
    gd->add_option("--train-n", spec.train_n, "held-out training queries");
    gd->add_option("--eval-n", spec.eval_n, "held-out evaluation queries");
    gd->add_option("--d", spec.dim, "vector dimensionality");
    gd->add_option("--clusters", spec.clusters, "gaussian mixture components");
    gd->add_option("--sigma", spec.sigma, "per-coordinate noise around centers");
    gd->add_option("--buckets", spec.buckets, "selectivity buckets, round-robin over queries")
        ->delimiter(',');
    gd->add_option("--k", spec.k, "neighbors per query");
    gd->add_option("--placement", spec.placement, "range window placement: default|uniform")
        ->check(CLI::IsMember({"default", "uniform"}));
    gd->add_option("--seed", spec.seed, "workload seed");
    gd->callback([&] {
        if (!fanns::is_known_scheme(spec.scheme))
            throw CLI::ValidationError("--scheme", "unknown scheme: " + spec.scheme);
        const fanns::Workload w = fanns::generate_workload(spec);
        fanns::save_workload(w, spec, out_dir);
        Manifest m;
        m.cmd = "gen-data";
        m.flags = {{"scheme", spec.scheme},
                   {"n", std::to_string(spec.base_n)},
                   {"train_n", std::to_string(spec.train_n)},
                   {"eval_n", std::to_string(spec.eval_n)},
                   {"d", std::to_string(spec.dim)},
                   {"clusters", std::to_string(spec.clusters)},
                   {"sigma", fmt(spec.sigma)},
                   {"k", std::to_string(spec.k)},
                   {"placement", spec.placement},
                   {"seed", std::to_string(spec.seed)}};
        for (const char* f : {"workload.json", "base.fvecs", "base.attrs.jsonl", "train.fvecs",
                              "train.filters.jsonl", "eval.fvecs", "eval.filters.jsonl"})
            record_output(m, out_dir + "/" + f);
        m.write(out_dir + "/manifest.json");
        std::cout << "workload " << spec.scheme << " base=" << spec.base_n
                  << " train=" << spec.train_n << " eval=" << spec.eval_n << " dim=" << spec.dim
                  << " -> " << out_dir << "\n";
    });

    // build-index
    CommonIn bi_in;
    std::string bi_out;
    fanns::BuildParams bparams;
    auto* bi = app.add_subcommand("build-index", "build the layered proximity graph");
    bi->add_option("--data", bi_in.data, "workload directory")->required();
    bi->add_option("--out", bi_out, "output index file")->required();
    bi->add_option("--M", bparams.M, "graph degree parameter");
    bi->add_option("--ef-construction", bparams.ef_construction, "construction beam width");
    bi->add_option("--threads", bparams.threads, "insertion threads");
    bi->add_option("--seed", bparams.seed, "level assignment seed");
    bi->callback([&] {
        Manifest m;
        m.cmd = "build-index";
        take_workload_inputs(m, bi_in, false);
        const fanns::AttributedDataset ds = fanns::load_workload_dataset(bi_in.data);
        const auto t0 = std::chrono::steady_clock::now();
        const fanns::ProximityGraph g = fanns::build_graph(ds, bparams);
        const auto t1 = std::chrono::steady_clock::now();
        fanns::save_graph(bi_out, g);
        m.flags = {{"M", std::to_string(bparams.M)},
                   {"ef_construction", std::to_string(bparams.ef_construction)},
                   {"threads", std::to_string(bparams.threads)},
                   {"seed", std::to_string(bparams.seed)}};
        record_output(m, bi_out);
        m.write(bi_out + ".manifest.json");
        std::cout << "index n=" << g.n << " dim=" << g.dim << " layers=" << g.layers.size()
                  << " entry=" << g.entry_point << " ("
                  << fmt(std::chrono::duration<double>(t1 - t0).count()) << "s, kernel "
                  << fanns::simd::l2_kernel_name() << ") -> " << bi_out << "\n";
    });

    // ground-truth
    CommonIn gt_in;
    std::string gt_out;
    int gt_k = 0;
    auto* gt = app.add_subcommand("ground-truth", "exact filtered k-nn by linear scan");
    gt->add_option("--data", gt_in.data, "workload directory")->required();
    gt->add_option("--queries", gt_in.split, "train or eval")->check(CLI::IsMember({"train", "eval"}));
    gt->add_option("--k", gt_k, "override the workload's k (0 keeps it)");
    gt->add_option("--out", gt_out, "output ground truth file")->required();
    gt->callback([&] {
        Manifest m;
        m.cmd = "ground-truth";
        take_workload_inputs(m, gt_in, true);
        const fanns::AttributedDataset ds = fanns::load_workload_dataset(gt_in.data);
        auto queries = fanns::load_workload_queries(gt_in.data, gt_in.split);
        if (gt_k > 0)
            for (auto& q : queries) q.k = gt_k;
        const auto truth = fanns::generate_ground_truth(ds, queries);
        fanns::io::write_ground_truth(gt_out, truth);
        std::size_t total = 0, empty = 0;
        for (const auto& t : truth) {
            total += t.size();
            if (t.empty()) ++empty;
        }
        m.flags = {{"queries", gt_in.split}, {"k", std::to_string(gt_k)}};
        record_output(m, gt_out);
        m.write(gt_out + ".manifest.json");
        std::cout << "ground truth queries=" << truth.size() << " mean_size="
                  << fmt(truth.empty() ? 0.0
                                       : static_cast<double>(total) /
                                             static_cast<double>(truth.size()))
                  << " empty=" << empty << " -> " << gt_out << "\n";
    });

    // harvest
    CommonIn hv_in;
    std::string hv_index, hv_truth, hv_out, hv_mode = "post";
    fanns::HarvestParams hparams;
    auto* hv = app.add_subcommand("harvest", "probe queries and emit feature/cost rows");
    hv->add_option("--data", hv_in.data, "workload directory")->required();
    hv->add_option("--queries", hv_in.split, "train or eval")->check(CLI::IsMember({"train", "eval"}));
    hv->add_option("--index", hv_index, "index file")->required();
    hv->add_option("--truth", hv_truth, "ground truth file")->required();
    hv->add_option("--out", hv_out, "output training csv")->required();
    hv->add_option("--mode", hv_mode, "post or pre")->check(CLI::IsMember({"post", "pre"}));
    hv->add_option("--probe-f", hparams.probe_f, "probe budget in distance computations");
    hv->add_option("--two-hop-threshold", hparams.two_hop_threshold,
                   "pre mode: expand 2-hop when the valid fraction falls below this");
    hv->add_option("--threads", hparams.threads, "harvest worker threads");
    hv->callback([&] {
        Manifest m;
        m.cmd = "harvest";
        take_workload_inputs(m, hv_in, true);
        take_input(m, hv_index);
        take_input(m, hv_truth);
        hparams.mode = parse_mode(hv_mode);
        const fanns::AttributedDataset ds = fanns::load_workload_dataset(hv_in.data);
        const auto queries = fanns::load_workload_queries(hv_in.data, hv_in.split);
        const fanns::ProximityGraph g = fanns::load_graph(hv_index);
        const auto truth = fanns::io::read_ground_truth(hv_truth);
        const fanns::TrainingSet ts = fanns::harvest_training_set(g, ds, queries, truth, hparams);
        fanns::write_training_set_csv(ts, hv_out);
        std::size_t clamped = 0, disconnected = 0, exhausted = 0, empty = 0;
        for (const auto f : ts.flags) {
            clamped += (f & fanns::kRowClampedToProbe) != 0;
            disconnected += (f & fanns::kRowDisconnected) != 0;
            exhausted += (f & fanns::kRowProbeExhausted) != 0;
            empty += (f & fanns::kRowEmptyTruth) != 0;
        }
        m.flags = {{"queries", hv_in.split},
                   {"mode", hv_mode},
                   {"probe_f", std::to_string(hparams.probe_f)},
                   {"two_hop_threshold", fmt(hparams.two_hop_threshold)},
                   {"threads", std::to_string(hparams.threads)}};
        record_output(m, hv_out);
        m.write(hv_out + ".manifest.json");
        std::cout << "harvest rows=" << ts.rows() << " schema=" << ts.schema_id
                  << " clamped=" << clamped << " disconnected=" << disconnected
                  << " probe_exhausted=" << exhausted << " empty_truth=" << empty << " -> "
                  << hv_out << "\n";
    });

    // train
    std::string tr_in, tr_out, tr_mask = "none";
    fanns::GbdtParams gparams;
    auto* tr = app.add_subcommand("train", "fit the boosted-trees cost model");
    tr->add_option("--training-set", tr_in, "training csv")->required();
    tr->add_option("--out", tr_out, "output model json")->required();
    tr->add_option("--trees", gparams.trees, "boosting rounds");
    tr->add_option("--depth", gparams.max_depth, "tree depth limit");
    tr->add_option("--eta", gparams.learning_rate, "shrinkage per round");
    tr->add_option("--subsample", gparams.subsample, "row fraction per tree");
    tr->add_option("--min-samples-leaf", gparams.min_samples_leaf, "minimum rows per leaf");
    tr->add_option("--seed", gparams.seed, "subsample seed");
    tr->add_option("--method", gparams.method, "exact or hist")
        ->check(CLI::IsMember({"exact", "hist"}));
    tr->add_option("--bins", gparams.bins, "histogram bins (hist method)");
    tr->add_option("--mask", tr_mask, "'filter' zeroes the filter-derived features")
        ->check(CLI::IsMember({"filter", "none"}));
    tr->add_flag("--drop-disconnected", gparams.drop_disconnected,
                 "skip rows whose search exhausted before full recall");
    tr->callback([&] {
        Manifest m;
        m.cmd = "train";
        take_input(m, tr_in);
        fanns::TrainingSet ts = fanns::read_training_set_csv(tr_in);
        if (tr_mask == "filter") ts = fanns::apply_filter_mask(ts);
        const auto t0 = std::chrono::steady_clock::now();
        const fanns::BoostedTreesModel model = fanns::BoostedTreesModel::train(ts, gparams);
        const auto t1 = std::chrono::steady_clock::now();
        model.save(tr_out);
        m.flags = {{"trees", std::to_string(gparams.trees)},
                   {"depth", std::to_string(gparams.max_depth)},
                   {"eta", fmt(gparams.learning_rate)},
                   {"subsample", fmt(gparams.subsample)},
                   {"min_samples_leaf", std::to_string(gparams.min_samples_leaf)},
                   {"seed", std::to_string(gparams.seed)},
                   {"method", gparams.method},
                   {"bins", std::to_string(gparams.bins)},
                   {"mask", tr_mask},
                   {"drop_disconnected", gparams.drop_disconnected ? "true" : "false"}};
        record_output(m, tr_out);
        m.write(tr_out + ".manifest.json");
        std::cout << "model schema=" << model.schema_id() << " rows=" << ts.rows()
                  << " trees=" << model.tree_count() << " final_train_mse="
                  << fmt(model.train_loss_curve().empty() ? 0.0
                                                          : model.train_loss_curve().back())
                  << " (" << fmt(std::chrono::duration<double>(t1 - t0).count()) << "s) -> "
                  << tr_out << "\n";
        auto imp = model.feature_importance();
        const double total = model.total_gain();
        for (std::size_t i = 0; i < imp.size() && i < 3; ++i)
            std::cout << "  " << imp[i].first << " gain_share="
                      << fmt(total > 0 ? imp[i].second / total : 0.0) << "\n";
    });

    // evaluate
    CommonIn ev_in;
    std::string ev_index, ev_truth, ev_model, ev_out, ev_policy = "fixed-beam",
                                                      ev_mode = "post";
    std::vector<double> ev_alphas, ev_beams, ev_budgets;
    fanns::SweepConfig scfg;
    auto* ev = app.add_subcommand("evaluate", "sweep a termination policy over a query set");
    ev->add_option("--data", ev_in.data, "workload directory")->required();
    ev->add_option("--queries", ev_in.split, "train or eval")->check(CLI::IsMember({"train", "eval"}));
    ev->add_option("--index", ev_index, "index file")->required();
    ev->add_option("--truth", ev_truth, "ground truth file")->required();
    ev->add_option("--policy", ev_policy, "fixed-beam, fixed-budget or predicted")
        ->check(CLI::IsMember({"fixed-beam", "fixed-budget", "predicted"}));
    ev->add_option("--alpha-list", ev_alphas, "alpha knobs for the predicted policy")
        ->delimiter(',');
    ev->add_option("--beam-list", ev_beams, "beam widths for the fixed-beam policy")
        ->delimiter(',');
    ev->add_option("--budget-list", ev_budgets, "ndc budgets for the fixed-budget policy")
        ->delimiter(',');
    ev->add_option("--model", ev_model, "model json (predicted policy)");
    ev->add_option("--mode", ev_mode, "post or pre")->check(CLI::IsMember({"post", "pre"}));
    ev->add_option("--probe-f", scfg.probe_f, "probe budget (predicted policy)");
    ev->add_option("--hard-cap", scfg.hard_cap, "budget ceiling, 0 means 64x probe");
    ev->add_option("--two-hop-threshold", scfg.two_hop_threshold, "pre mode fallback trigger");
    ev->add_option("--runs", scfg.timing_runs, "latency repetitions");
    ev->add_option("--out", ev_out, "output sweep csv")->required();
    ev->callback([&] {
        Manifest m;
        m.cmd = "evaluate";
        take_workload_inputs(m, ev_in, true);
        take_input(m, ev_index);
        take_input(m, ev_truth);
        scfg.mode = parse_mode(ev_mode);
        fanns::BoostedTreesModel model;
        if (ev_policy == "fixed-beam") {
            scfg.kind = fanns::TerminationPolicy::Kind::FixedBeam;
            scfg.knobs = ev_beams;
            if (scfg.knobs.empty())
                throw CLI::ValidationError("--beam-list", "required for the fixed-beam policy");
        } else if (ev_policy == "fixed-budget") {
            scfg.kind = fanns::TerminationPolicy::Kind::FixedBudget;
            scfg.knobs = ev_budgets;
            if (scfg.knobs.empty())
                throw CLI::ValidationError("--budget-list", "required for the fixed-budget policy");
        } else {
            if (ev_model.empty())
                throw CLI::ValidationError("--model", "required for the predicted policy");
            take_input(m, ev_model);
            model = fanns::BoostedTreesModel::load(ev_model);
            scfg.kind = fanns::TerminationPolicy::Kind::Predicted;
            scfg.model = &model;
            scfg.knobs = ev_alphas;
            if (scfg.knobs.empty())
                throw CLI::ValidationError("--alpha-list", "required for the predicted policy");
        }
        const fanns::AttributedDataset ds = fanns::load_workload_dataset(ev_in.data);
        const auto queries = fanns::load_workload_queries(ev_in.data, ev_in.split);
        const fanns::ProximityGraph g = fanns::load_graph(ev_index);
        const auto truth = fanns::io::read_ground_truth(ev_truth);

        m.flags = {{"queries", ev_in.split}, {"policy", ev_policy},    {"mode", ev_mode},
                   {"probe_f", std::to_string(scfg.probe_f)},
                   {"hard_cap", std::to_string(scfg.hard_cap)},
                   {"two_hop_threshold", fmt(scfg.two_hop_threshold)},
                   {"runs", std::to_string(scfg.timing_runs)}};
        {
            std::string knob_str;
            for (const double kn : scfg.knobs) knob_str += fmt(kn) + ",";
            if (!knob_str.empty()) knob_str.pop_back();
            m.flags["knobs"] = knob_str;
        }
        // The config hash covers flags and input hashes but no timestamps,
        // so reruns over identical inputs produce an identical csv header.
        fanns::Fnv64 ch;
        for (const auto& [k, v] : m.flags) ch.update(k.data(), k.size()), ch.update(v.data(), v.size());
        for (const auto& [k, v] : m.input_hashes) ch.update(k.data(), k.size()), ch.update(v.data(), v.size());

        const auto rows = fanns::run_sweep(g, ds, queries, truth, scfg);
        fanns::write_sweep_csv(ev_out, rows, ch.hex());
        record_output(m, ev_out);
        m.write(ev_out + ".manifest.json");
        std::cout << "policy=" << ev_policy << " mode=" << ev_mode << " queries=" << queries.size()
                  << "\n";
        std::printf("%12s %10s %12s %14s\n", "knob", "recall", "mean_ndc", "latency_ms");
        for (const auto& r : rows)
            std::printf("%12g %10.4f %12.1f %14.4f\n", r.knob, r.recall, r.mean_ndc,
                        r.mean_latency_ms);
    });

    // importance
    std::string im_model, im_out;
    int im_top = 0;
    auto* im = app.add_subcommand("importance", "per-feature split gain of a trained model");
    im->add_option("--model", im_model, "model json")->required();
    im->add_option("--top", im_top, "print only the top n features");
    im->add_option("--out", im_out, "optional csv output");
    im->callback([&] {
        Manifest m;
        m.cmd = "importance";
        take_input(m, im_model);
        const fanns::BoostedTreesModel model = fanns::BoostedTreesModel::load(im_model);
        const auto imp = model.feature_importance();
        const double total = model.total_gain();
        const std::size_t limit =
            im_top > 0 ? std::min<std::size_t>(imp.size(), static_cast<std::size_t>(im_top))
                       : imp.size();
        std::printf("%-20s %16s %8s\n", "feature", "gain", "share");
        for (std::size_t i = 0; i < limit; ++i)
            std::printf("%-20s %16.6g %8.4f\n", imp[i].first.c_str(), imp[i].second,
                        total > 0 ? imp[i].second / total : 0.0);
        if (!im_out.empty()) {
            std::ofstream out(im_out, std::ios::binary | std::ios::trunc);
            if (!out) throw fanns::IoError("cannot write file: " + im_out);
            out << "feature,gain,share\n";
            char buf[128];
            for (const auto& [name, gain] : imp) {
                std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", name.c_str(), gain,
                              total > 0 ? gain / total : 0.0);
                out << buf;
            }
            if (!out) throw fanns::IoError("write failed: " + im_out);
            m.flags = {{"top", std::to_string(im_top)}};
            record_output(m, im_out);
            m.write(im_out + ".manifest.json");
        }
    });

    // misalignment
    CommonIn mi_in;
    std::string mi_out;
    int mi_m = 100;
    auto* mi = app.add_subcommand("misalignment",
                                  "global selectivity vs local validity per query");
    mi->add_option("--data", mi_in.data, "workload directory")->required();
    mi->add_option("--queries", mi_in.split, "train or eval")->check(CLI::IsMember({"train", "eval"}));
    mi->add_option("--m", mi_m, "neighborhood size for the local ratio");
    mi->add_option("--out", mi_out, "output csv")->required();
    mi->callback([&] {
        Manifest m;
        m.cmd = "misalignment";
        take_workload_inputs(m, mi_in, true);
        const fanns::AttributedDataset ds = fanns::load_workload_dataset(mi_in.data);
        const auto queries = fanns::load_workload_queries(mi_in.data, mi_in.split);
        const auto rep = fanns::misalignment_report(ds, queries, mi_m);
        fanns::write_misalignment_csv(mi_out, rep);
        m.flags = {{"queries", mi_in.split}, {"m", std::to_string(mi_m)}};
        record_output(m, mi_out);
        m.write(mi_out + ".manifest.json");
        std::cout << "misalignment queries=" << queries.size() << " mean_sigma="
                  << fmt(rep.mean_sigma) << " mean_rho=" << fmt(rep.mean_rho) << " spearman="
                  << (rep.spearman ? fmt(*rep.spearman) : std::string("n/a")) << " -> " << mi_out
                  << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const fanns::HashMismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fanns::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
