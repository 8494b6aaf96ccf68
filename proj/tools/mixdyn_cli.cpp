// mixdyn: run, sweep and verify switching-comparator experiments.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mixdyn/harness/config.hpp"
#include "mixdyn/harness/experiment.hpp"
#include "mixdyn/harness/verify.hpp"

namespace {

using mixdyn::harness::KeyValues;

struct RunFlags {
    std::string config;
    std::optional<std::string> scheme, loss, base, mode, out, generator, segments;
    std::optional<std::string> sub_a, sub_b, sub_c, horizon, seed, segment_count, segment_params, sigma;
    bool audit = false;
};

void apply(KeyValues& kv, const char* key, const std::optional<std::string>& v) {
    if (v) kv[key] = *v;
}

int do_run(const RunFlags& f) {
    KeyValues kv = f.config.empty() ? KeyValues{} : mixdyn::harness::load_key_values(f.config);
    apply(kv, "scheme", f.scheme);
    apply(kv, "loss", f.loss);
    apply(kv, "base", f.base);
    apply(kv, "mode", f.mode);
    apply(kv, "out", f.out);
    apply(kv, "generator", f.generator);
    apply(kv, "segments", f.segments);
    apply(kv, "sub_a", f.sub_a);
    apply(kv, "sub_b", f.sub_b);
    apply(kv, "sub_c", f.sub_c);
    apply(kv, "horizon", f.horizon);
    apply(kv, "seed", f.seed);
    apply(kv, "segment_count", f.segment_count);
    apply(kv, "segment_params", f.segment_params);
    apply(kv, "sigma", f.sigma);
    // An explicit plan on the command line replaces an equal-length plan from the file.
    if (f.segments) {
        kv.erase("segment_count");
        kv.erase("segment_params");
        if (!f.horizon) kv.erase("horizon");
    }

    const auto config = mixdyn::harness::parse_config(kv);
    const auto result = mixdyn::harness::run(config, mixdyn::harness::Registry{}, f.audit);
    mixdyn::harness::write_outputs(result, config.out);

    const auto& r = result.report;
    std::printf("scheme=%s T=%lld S=%lld regret=%.6f created=%lld work=%lld switches=%lld/%lld\n",
                mixdyn::to_string(config.scheme), static_cast<long long>(r.horizon),
                static_cast<long long>(r.segments), r.dynamic_regret, static_cast<long long>(r.created_experts),
                static_cast<long long>(r.total_work), static_cast<long long>(r.realized_switches),
                static_cast<long long>(r.switch_bound));
    if (result.max_divergence)
        std::printf("lazy/eager max divergence=%.3g jt_match=%s\n", *result.max_divergence,
                    result.jt_match.value_or(false) ? "yes" : "no");
    if (!result.agreement_ok()) {
        std::fprintf(stderr, "error: lazy and eager engines disagree\n");
        return 3;
    }
    const auto& a = result.trace.audit;
    if (a.row_sum_violations != 0 || a.dead_reset_violations != 0) {
        std::fprintf(stderr, "error: transition audit failed\n");
        return 3;
    }
    return 0;
}

int do_sweep(const std::string& path, const std::optional<std::string>& out) {
    auto kv = mixdyn::harness::load_key_values(path);
    if (out) kv["out"] = *out;
    const auto dir = kv.count("out") ? kv["out"] : std::string("out");
    const auto rows = mixdyn::harness::sweep(mixdyn::harness::expand_sweep(kv));
    mixdyn::harness::write_atomically(std::filesystem::path(dir) / "sweep.csv", mixdyn::harness::sweep_csv(rows));
    std::cout << mixdyn::harness::sweep_csv(rows);
    for (const auto& r : rows)
        if (r.status != "ok") return 2;
    return 0;
}

int do_verify(unsigned long long seed) {
    const auto checks = mixdyn::harness::verify_builtin(seed);
    bool ok = true;
    for (const auto& c : checks) {
        std::printf("[%s] %s  %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        ok = ok && c.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online mixtures of restarted base learners against switching comparators"};
    app.require_subcommand(1);

    RunFlags rf;
    auto* run = app.add_subcommand("run", "Run one experiment and write trace.csv / summary.json");
    run->add_option("--config", rf.config, "key = value configuration file");
    run->add_option("--scheme", rf.scheme, "lin | log | sub");
    run->add_option("--loss", rf.loss, "square | bernoulli");
    run->add_option("--base", rf.base, "kt | running-mean");
    run->add_option("--horizon", rf.horizon, "time horizon T");
    run->add_option("--seed", rf.seed, "64-bit RNG seed");
    run->add_option("--mode", rf.mode, "lazy | eager | both");
    run->add_option("--out", rf.out, "output directory");
    run->add_option("--sub-a", rf.sub_a, "period ladder parameter a");
    run->add_option("--sub-b", rf.sub_b, "period ladder parameter b");
    run->add_option("--sub-c", rf.sub_c, "period ladder parameter c");
    run->add_option("--generator", rf.generator, "stream generator");
    run->add_option("--segments", rf.segments, "explicit plan len:param,len:param,...");
    run->add_option("--segment-count", rf.segment_count, "number of equal-length segments");
    run->add_option("--segment-params", rf.segment_params, "parameters cycled over segments");
    run->add_option("--sigma", rf.sigma, "gaussian noise level");
    run->add_flag("--audit", rf.audit, "audit every transition (slower)");

    std::string sweep_path;
    std::optional<std::string> sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Run the cartesian product of sweep.* keys and write sweep.csv");
    sweep->add_option("--config", sweep_path, "key = value configuration file")->required();
    sweep->add_option("--out", sweep_out, "output directory");

    unsigned long long verify_seed = 7;
    auto* verify = app.add_subcommand("verify", "Run the built-in path-oracle and invariant checks");
    verify->add_option("--seed", verify_seed, "seed for the tiny random instances");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return do_run(rf);
        if (*sweep) return do_sweep(sweep_path, sweep_out);
        if (*verify) return do_verify(verify_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
