// skrm: run skyrmion racetrack B^e-tree experiments from the command line.

#include <exception>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <skrm/btree.hpp>
#include <skrm/error.hpp>
#include <skrm/experiment.hpp>

namespace {

struct RunFlags {
    std::string config_path;
    std::string workload;
    std::string mapping;
    std::string strategy;
    std::string encoding;
    std::string parallel;
    std::string entries;
    std::string ops;
    std::string word_bytes;
    std::string seed;
    std::string out;
    std::string format = "csv";
    bool ablation = false;
};

void add_common(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_path, "key = value configuration file");
    cmd->add_option("--workload", f.workload, "YCSB workload a..f");
    cmd->add_option("--mapping", f.mapping, "word | bit");
    cmd->add_option("--strategy", f.strategy, "naive | dcw | pw | bcw");
    cmd->add_option("--encoding", f.encoding, "on | off");
    cmd->add_option("--parallel-ports", f.parallel, "on | off");
    cmd->add_option("--entries", f.entries, "load-phase inserts");
    cmd->add_option("--ops", f.ops, "run-phase operations (default: entries)");
    cmd->add_option("--word-bytes", f.word_bytes, "word size in bytes");
    cmd->add_option("--seed", f.seed, "workload seed");
    cmd->add_option("--out", f.out, "output file (default: stdout)");
    cmd->add_option("--format", f.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
}

skrm::ExperimentConfig build_config(const RunFlags& f) {
    skrm::ExperimentConfig c;
    if (!f.config_path.empty()) {
        c = skrm::ExperimentConfig::load(f.config_path);
    }
    const auto set = [&](const char* key, const std::string& v) {
        if (!v.empty()) {
            c.apply(key, v);
        }
    };
    set("workload", f.workload);
    set("mapping", f.mapping);
    set("strategy", f.strategy);
    set("encoding", f.encoding);
    set("parallel_ports", f.parallel);
    set("entries", f.entries);
    set("ops", f.ops);
    set("word_bytes", f.word_bytes);
    set("seed", f.seed);
    c.validate();
    return c;
}

void write_out(const std::vector<skrm::MetricsReport>& reports, const RunFlags& f) {
    if (f.out.empty()) {
        std::cout << (f.format == "json" ? skrm::to_json(reports) + "\n" : skrm::to_csv(reports));
    } else {
        skrm::emit(reports, f.format, f.out);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skyrmion racetrack memory B^e-tree simulator"};
    app.require_subcommand(1);

    RunFlags run;
    auto* run_cmd = app.add_subcommand("run", "compare a configuration against the naive baseline");
    add_common(run_cmd, run);
    run_cmd->add_flag("--ablation", run.ablation, "baseline, parallel-only, encoding-only and both");

    RunFlags sweep;
    std::vector<std::uint64_t> sweep_entries{1000, 10000, 100000, 1000000};
    std::vector<std::uint32_t> sweep_bytes{4, 8, 16, 32};
    std::string sweep_workloads = "a";
    unsigned threads = 0;
    auto* sweep_cmd = app.add_subcommand("sweep", "grid over entry counts and word sizes");
    add_common(sweep_cmd, sweep);
    sweep_cmd->add_option("--grid-entries", sweep_entries, "entry counts")->delimiter(',');
    sweep_cmd->add_option("--grid-word-bytes", sweep_bytes, "word sizes in bytes")->delimiter(',');
    sweep_cmd->add_option("--grid-workloads", sweep_workloads, "workload letters, e.g. adf or a,d,f");
    sweep_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");

    std::uint64_t wc_n = 100000;
    std::uint64_t wc_seed = 42;
    std::uint32_t wc_cap = 16;
    std::string wc_metric = "kv";
    bool wc_curve = false;
    auto* wc_cmd = app.add_subcommand("write-counts", "B-tree vs B^e-tree key-value write counts");
    wc_cmd->add_option("--n", wc_n, "number of inserts")->check(CLI::PositiveNumber);
    wc_cmd->add_option("--seed", wc_seed, "insert stream seed");
    wc_cmd->add_option("--node-capacity", wc_cap, "pairs per node")->check(CLI::Range(3u, 4096u));
    wc_cmd->add_option("--metric", wc_metric, "kv | slots")->check(CLI::IsMember({"kv", "slots"}));
    wc_cmd->add_flag("--curve", wc_curve, "report every power of ten up to n");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const auto cfg = build_config(run);
            write_out(run.ablation ? skrm::run_ablation(cfg) : skrm::run_experiment(cfg), run);
        } else if (*sweep_cmd) {
            const auto cfg = build_config(sweep);
            skrm::SweepOptions opts;
            opts.entries = sweep_entries;
            opts.word_bytes = sweep_bytes;
            opts.workloads.clear();
            for (char c : sweep_workloads) {
                if (c != ',') {
                    opts.workloads.push_back(c);
                }
            }
            opts.threads = threads;
            write_out(skrm::run_sweep(cfg, opts), sweep);
        } else if (*wc_cmd) {
            skrm::WriteCountOptions opts;
            opts.node_slots = wc_cap;
            opts.metric = wc_metric == "slots" ? skrm::WriteMetric::SlotRewrites : skrm::WriteMetric::KvWrites;
            std::vector<std::uint64_t> samples;
            if (wc_curve) {
                for (std::uint64_t n = 10; n < wc_n; n *= 10) {
                    samples.push_back(n);
                }
            }
            samples.push_back(wc_n);
            std::cout << "n,btree_writes,betree_writes,ratio\n" << std::setprecision(6);
            for (const auto& p : skrm::write_count_curve(samples, wc_seed, opts)) {
                std::cout << p.n << ',' << p.btree_writes << ',' << p.betree_writes << ',' << p.ratio << '\n';
            }
        }
    } catch (const skrm::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const skrm::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
