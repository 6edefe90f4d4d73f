#include "mixlab/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mixlab/coverage.hpp"
#include "mixlab/error.hpp"
#include "mixlab/lamplighter.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/passage.hpp"
#include "mixlab/spectral.hpp"
#include "mixlab/verify.hpp"

namespace mixlab {

Json run_config_to_json(const RunConfig& c) {
    return Json{{"command", c.command},
                {"chain", c.chain},
                {"lazy", c.lazy},
                {"seed", c.seed},
                {"replicates", c.replicates},
                {"threads", c.threads},
                {"csv", c.csv},
                {"out", c.out},
                {"start", c.start},
                {"tmax", c.tmax},
                {"metric", c.metric},
                {"from", c.from},
                {"to", c.to},
                {"theta", c.theta},
                {"delta", c.delta},
                {"gamma", c.gamma},
                {"mode", c.mode},
                {"c", c.c},
                {"m", c.m},
                {"convention", c.convention},
                {"family", c.family},
                {"sizes", c.sizes},
                {"experiment", c.experiment},
                {"golden", c.golden},
                {"golden_dir", c.golden_dir}};
}

RunConfig run_config_from_json(const Json& j, RunConfig c) {
    if (!j.is_object()) throw Error(ErrorKind::Validation, "config must be a JSON object");
    const Json known = run_config_to_json(c);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.contains(it.key())) throw Error(ErrorKind::Validation, "unknown config key '" + it.key() + "'");
    }
    auto take = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("command", c.command);
    take("chain", c.chain);
    take("lazy", c.lazy);
    take("seed", c.seed);
    take("replicates", c.replicates);
    take("threads", c.threads);
    take("csv", c.csv);
    take("out", c.out);
    take("start", c.start);
    take("tmax", c.tmax);
    take("metric", c.metric);
    take("from", c.from);
    take("to", c.to);
    take("theta", c.theta);
    take("delta", c.delta);
    take("gamma", c.gamma);
    take("mode", c.mode);
    take("c", c.c);
    take("m", c.m);
    take("convention", c.convention);
    take("family", c.family);
    take("sizes", c.sizes);
    take("experiment", c.experiment);
    take("golden", c.golden);
    take("golden_dir", c.golden_dir);
    return c;
}

Json chain_to_json(const MarkovChain& chain) {
    Json rows = Json::array();
    for (std::size_t x = 0; x < chain.size(); ++x) {
        Json row = Json::array();
        auto targets = chain.row_targets(x);
        auto probs = chain.row_probs(x);
        for (std::size_t k = 0; k < targets.size(); ++k) row.push_back({targets[k], probs[k]});
        rows.push_back(row);
    }
    Json j{{"n", chain.size()}, {"rows", rows}};
    if (!chain.labels().empty()) j["labels"] = chain.labels();
    j["stationary"] = chain.stationary();
    j["reversible"] = chain.reversible();
    return j;
}

MarkovChain chain_from_json(const Json& j) {
    try {
        const auto n = j.at("n").get<std::size_t>();
        const auto& rows_json = j.at("rows");
        if (rows_json.size() != n) throw Error(ErrorKind::DimensionMismatch, "rows length differs from n");
        SparseRows rows(n);
        for (std::size_t x = 0; x < n; ++x) {
            for (const auto& entry : rows_json[x]) {
                rows[x].push_back({entry.at(0).get<std::size_t>(), entry.at(1).get<double>()});
            }
        }
        std::vector<std::string> labels = j.value("labels", std::vector<std::string>{});
        return from_kernel(rows, std::move(labels));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Io, std::string("malformed chain file: ") + e.what());
    }
}

MarkovChain parse_chain_spec(const std::string& spec, double laziness) {
    if (spec.empty()) throw Error(ErrorKind::Validation, "no chain given (use --chain)");
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        const std::string kind = spec.substr(0, colon);
        const std::string arg = spec.substr(colon + 1);
        if (kind == "file") return parse_chain_spec(arg, laziness);
        std::size_t size = 0;
        try {
            std::size_t used = 0;
            size = std::stoul(arg, &used);
            if (used != arg.size()) throw std::invalid_argument(arg);
        } catch (const std::exception&) {
            throw Error(ErrorKind::Validation, "bad size in chain spec '" + spec + "'");
        }
        return build_family_member({kind, {}, laziness}, size);
    }
    std::ifstream in(spec);
    if (!in) throw Error(ErrorKind::Io, "cannot open chain file '" + spec + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::Io, "cannot parse chain file '" + spec + "': " + e.what());
    }
    return chain_from_json(j);
}

namespace {

EstimateMode parse_mode(const std::string& mode) {
    if (mode == "auto") return EstimateMode::Auto;
    if (mode == "exact") return EstimateMode::Exact;
    if (mode == "mc") return EstimateMode::MonteCarlo;
    throw Error(ErrorKind::Validation, "unknown mode '" + mode + "' (auto, exact, mc)");
}

const std::vector<std::string> kMetricNames{"tv", "l2", "sep", "entropy"};

std::vector<std::string> selected_metrics(const std::string& metric) {
    if (metric == "all") return kMetricNames;
    for (const auto& name : kMetricNames) {
        if (name == metric) return {name};
    }
    throw Error(ErrorKind::Validation, "unknown metric '" + metric + "' (all, tv, l2, sep, entropy)");
}

double metric_value(const DistanceProfile& p, const std::string& name) {
    if (name == "tv") return p.tv;
    if (name == "l2") return p.l2;
    if (name == "sep") return p.sep;
    return p.entropy;
}

std::string profile_csv(const std::vector<DistanceProfile>& series, const std::string& metric) {
    const auto columns = selected_metrics(metric);
    std::ostringstream os;
    os.precision(17);
    os << 't';
    for (const auto& c : columns) os << ',' << c;
    os << '\n';
    for (const auto& p : series) {
        os << p.time;
        for (const auto& c : columns) os << ',' << metric_value(p, c);
        os << '\n';
    }
    return os.str();
}

Json profile_json(const std::vector<DistanceProfile>& series, const std::string& metric) {
    const auto columns = selected_metrics(metric);
    Json rows = Json::array();
    for (const auto& p : series) {
        Json row{{"t", p.time}};
        for (const auto& c : columns) row[c] = metric_value(p, c);
        rows.push_back(row);
    }
    return rows;
}

Json mixing_json(const MixingTimes& t) {
    return {{"tau_tv", t.tau_tv},
            {"tau_2", t.tau_2},
            {"tau_sep", t.tau_sep},
            {"tau_ent", t.tau_ent},
            {"epsilons",
             {{"tv", t.epsilons.tv}, {"l2", t.epsilons.l2}, {"sep", t.epsilons.sep}, {"entropy", t.epsilons.entropy}}}};
}

TStarOptions tstar_options(const RunConfig& cfg) {
    TStarOptions ts;
    ts.mode = parse_mode(cfg.mode);
    ts.gamma = cfg.gamma;
    ts.mc.replicates = cfg.replicates;
    ts.mc.seed = cfg.seed;
    ts.mc.threads = cfg.threads;
    ts.subset.threads = cfg.threads;
    return ts;
}

std::size_t start_or_zero(const RunConfig& cfg) { return cfg.start < 0 ? 0 : static_cast<std::size_t>(cfg.start); }

struct Output {
    std::string text;
    int code = 0;
};

Output cmd_spectral(const RunConfig& cfg) {
    const auto chain = parse_chain_spec(cfg.chain, cfg.lazy);
    const auto s = analyze(chain);
    Json j{{"n", chain.size()},   {"t_rel", s.t_rel},     {"gap", s.gap},
           {"lambda1", s.lambda1}, {"lambda_min", s.lambda_min}, {"lambda_star", s.lambda_star},
           {"sigma1", s.sigma1},   {"full_spectrum", s.full_spectrum}, {"eigenvalues", s.eigenvalues}};
    return {j.dump(2) + "\n"};
}

Output cmd_hitting(const RunConfig& cfg) {
    const auto chain = parse_chain_spec(cfg.chain, cfg.lazy);
    if (cfg.from >= 0 || cfg.to >= 0) {
        if (cfg.from < 0 || cfg.to < 0) throw Error(ErrorKind::Validation, "--from and --to go together");
        const auto est = mc_hitting_estimate(chain, static_cast<std::size_t>(cfg.from), static_cast<std::size_t>(cfg.to),
                                             cfg.replicates, cfg.seed, cfg.threads);
        Json j{{"from", cfg.from}, {"to", cfg.to}, {"mean", est.mean}, {"std_error", est.std_error},
               {"replicates", est.replicates}, {"seed", est.seed}};
        return {j.dump(2) + "\n"};
    }
    const auto h = hitting_times(chain);
    Json j{{"n", chain.size()},           {"max_hitting", h.max_hitting}, {"argmax_from", h.argmax_from},
           {"argmax_to", h.argmax_to},    {"tail_threshold", h.tail_threshold}, {"return_tail", h.return_tail}};
    if (chain.size() <= MarkovChain::kDenseThreshold) {
        Json matrix = Json::array();
        for (std::size_t x = 0; x < chain.size(); ++x) {
            Json row = Json::array();
            for (std::size_t y = 0; y < chain.size(); ++y) row.push_back(h.expected_hitting(x, y));
            matrix.push_back(row);
        }
        j["expected_hitting"] = matrix;
    }
    return {j.dump(2) + "\n"};
}

Output cmd_metrics(const RunConfig& cfg, const std::string& action) {
    const auto chain = parse_chain_spec(cfg.chain, cfg.lazy);
    if (action == "mixing") {
        MixingOptions opts;
        opts.starts.threads = cfg.threads;
        if (cfg.start >= 0) opts.starts.states = {static_cast<std::size_t>(cfg.start)};
        return {mixing_json(mixing_times(chain, {}, opts)).dump(2) + "\n"};
    }
    std::vector<DistanceProfile> series;
    if (cfg.start < 0) {
        StartSet starts;
        starts.threads = cfg.threads;
        series = worst_case_series(chain, cfg.tmax, starts);
    } else {
        series = distance_series(chain, DistributionVector::point_mass(chain.size(), start_or_zero(cfg)), cfg.tmax);
    }
    if (cfg.csv) return {profile_csv(series, cfg.metric)};
    return {profile_json(series, cfg.metric).dump(2) + "\n"};
}

Output cmd_coverage(const RunConfig& cfg, const std::string& action) {
    if (action == "explorer") {
        ChainFamily family{cfg.family, cfg.sizes, cfg.lazy};
        if (family.sizes.empty()) throw Error(ErrorKind::Validation, "explorer needs --sizes");
        const auto table = conjecture_explorer(family, cfg.theta, cfg.gamma, cfg.delta, tstar_options(cfg));
        if (cfg.csv) {
            std::ostringstream os;
            os.precision(17);
            os << "n,T_rel,H,F_measured,ratio\n";
            for (const auto& r : table.rows) {
                os << r.n << ',' << r.t_rel << ',' << r.max_hitting << ',' << r.f_measured << ',' << r.ratio << '\n';
            }
            return {os.str()};
        }
        Json rows = Json::array();
        for (const auto& r : table.rows) {
            rows.push_back({{"size", r.size_param},
                            {"n", r.n},
                            {"T_rel", r.t_rel},
                            {"H", r.max_hitting},
                            {"tau_tv", r.tau_tv},
                            {"F_measured", r.f_measured},
                            {"exact", r.exact},
                            {"ratio", r.ratio},
                            {"regime_large_gamma", r.regime_large_gamma},
                            {"regime_one_step", r.regime_one_step},
                            {"regime_generic", r.regime_generic}});
        }
        Json j{{"rows", rows}, {"ratio_spread", table.ratio_spread}, {"growth_flag", table.growth_flag}};
        return {j.dump(2) + "\n"};
    }

    const auto chain = parse_chain_spec(cfg.chain, cfg.lazy);
    if (action == "tstar") {
        const auto r = find_t_star(chain, DistributionVector::point_mass(chain.size(), start_or_zero(cfg)), cfg.theta,
                                   cfg.delta, tstar_options(cfg));
        Json j{{"t_star", r.t_star}, {"exact", r.exact}, {"value", r.value}, {"t_lower", r.t_lower},
               {"t_upper", r.t_upper}, {"confidence", r.confidence}};
        if (cfg.csv) {
            std::ostringstream os;
            os.precision(17);
            os << "t_star,exact,value,t_lower,t_upper\n"
               << r.t_star << ',' << r.exact << ',' << r.value << ',' << r.t_lower << ',' << r.t_upper << '\n';
            return {os.str()};
        }
        return {j.dump(2) + "\n"};
    }
    if (action == "key-theorem") {
        KeyTheoremParams p;
        p.theta = cfg.theta;
        p.c = cfg.c;
        p.mode = parse_mode(cfg.mode);
        p.mc.replicates = cfg.replicates;
        p.mc.seed = cfg.seed;
        p.mc.threads = cfg.threads;
        p.subset.threads = cfg.threads;
        const auto k = verify_key_theorem(chain, p);
        Json j{{"passed", k.passed},
               {"preconditions_met", k.preconditions_met},
               {"precondition_failures", k.precondition_failures},
               {"n", k.n},
               {"t_rel", k.t_rel},
               {"max_hitting", k.max_hitting},
               {"c1", k.c1},
               {"C1", k.C1},
               {"C2", k.C2},
               {"eta", k.eta},
               {"delta", k.delta},
               {"t_prime", k.t_prime},
               {"tau_tv", k.tau_tv},
               {"burn_in", k.burn_in},
               {"burn_in_extended", k.burn_in_extended},
               {"burn_in_start", k.burn_in_start},
               {"min_mu_over_pi", k.min_mu_over_pi},
               {"exact", k.exact},
               {"evaluated_at", k.evaluated_at},
               {"mgf", k.mgf},
               {"mgf_ci_lo", k.mgf_ci_lo},
               {"mgf_ci_hi", k.mgf_ci_hi},
               {"bound", k.bound},
               {"within_bound", k.within_bound},
               {"below_1_21", k.below_1_21},
               {"t_min", k.t_min},
               {"c_min", std::isfinite(k.c_min) ? Json(k.c_min) : Json(nullptr)}};
        return {j.dump(2) + "\n", k.passed ? 0 : 1};
    }
    if (action == "mgf") {
        // E[theta^Z_t] for t = 0..tmax, exact when the DP fits, else Monte Carlo.
        const auto start = DistributionVector::point_mass(chain.size(), start_or_zero(cfg));
        const auto ts = tstar_options(cfg);
        const std::size_t n = chain.size();
        bool exact = ts.mode == EstimateMode::Exact;
        if (ts.mode == EstimateMode::Auto) {
            exact = cfg.gamma <= 1 ? n <= ts.subset.max_states : n <= ts.occupancy.max_states;
        }
        Json rows = Json::array();
        if (exact) {
            std::optional<SubsetProcess> sub;
            std::optional<OccupancyProcess> occ;
            if (cfg.gamma <= 1) {
                sub.emplace(chain, start.probs, MarkRule::Target, true, ts.subset);
            } else {
                occ.emplace(chain, start.probs, cfg.gamma, ts.occupancy);
            }
            for (std::size_t t = 0; t <= cfg.tmax; ++t) {
                if (t > 0) sub ? sub->advance() : occ->advance();
                const double v = theta_mgf(sub ? sub->unmarked_count_law() : occ->undervisited_law(), cfg.theta);
                rows.push_back({{"t", t}, {"E_theta_mgf", v}, {"ci_lo", v}, {"ci_hi", v}, {"mode", "exact"}});
            }
        } else {
            std::vector<std::size_t> grid(cfg.tmax + 1);
            for (std::size_t t = 0; t <= cfg.tmax; ++t) grid[t] = t;
            McCoverageOptions mc = ts.mc;
            mc.gamma = cfg.gamma;
            const auto cov = mc_coverage(chain, start, grid, mc);
            for (std::size_t t = 0; t <= cfg.tmax; ++t) {
                const auto& samples = cfg.gamma <= 1 ? cov.unvisited[t] : cov.undervisited[t];
                const auto est = theta_mgf(std::span<const std::uint32_t>(samples), cfg.theta, ts.bootstrap);
                rows.push_back({{"t", t}, {"E_theta_mgf", est.value}, {"ci_lo", est.ci_lo}, {"ci_hi", est.ci_hi},
                                {"mode", "mc"}});
            }
        }
        if (cfg.csv) {
            std::ostringstream os;
            os.precision(17);
            os << "t,E_theta_mgf,ci_lo,ci_hi,mode\n";
            for (const auto& r : rows) {
                os << r["t"].get<std::size_t>() << ',' << r["E_theta_mgf"].get<double>() << ','
                   << r["ci_lo"].get<double>() << ',' << r["ci_hi"].get<double>() << ','
                   << r["mode"].get<std::string>() << '\n';
            }
            return {os.str()};
        }
        return {rows.dump(2) + "\n"};
    }
    throw Error(ErrorKind::Validation, "unknown coverage action '" + action + "'");
}

Output cmd_lamplighter(const RunConfig& cfg, const std::string& action) {
    const auto base = parse_chain_spec(cfg.chain, cfg.lazy);
    const LampSpec spec{cfg.m, parse_lamp_convention(cfg.convention)};
    if (action == "mixing") {
        WreathMixingOptions opts;
        if (cfg.start >= 0) opts.starts = {static_cast<std::size_t>(cfg.start)};
        opts.subset.threads = cfg.threads;
        return {mixing_json(wreath_mixing_times(base, spec, {}, opts)).dump(2) + "\n"};
    }
    const auto series = reduced_distance_series(base, spec, start_or_zero(cfg), cfg.tmax);
    if (cfg.csv) return {profile_csv(series, cfg.metric)};
    return {profile_json(series, cfg.metric).dump(2) + "\n"};
}

std::vector<NamedChain> key_theorem_chains() {
    std::vector<NamedChain> chains;
    for (std::size_t n = 4; n <= 10; ++n) chains.push_back({"complete:" + std::to_string(n), build_complete(n, true)});
    for (std::size_t d = 3; d <= 6; ++d) {
        chains.push_back({"hypercube:" + std::to_string(d) + "/lazy", build_hypercube(d, 0.5)});
    }
    return chains;
}

std::function<ExperimentReport()> experiment_job(const std::string& name, const RunConfig& cfg) {
    if (name == "inequality-suite") {
        return [cfg] {
            InequalityOptions o;
            o.seed = cfg.seed;
            o.threads = cfg.threads;
            o.excursion.seed = cfg.seed;
            o.excursion.trials = cfg.replicates;
            return run_inequality_suite(default_inequality_chains(cfg.seed), o);
        };
    }
    if (name == "wreath-l2-scaling") {
        return [cfg] {
            L2ScalingOptions o;
            if (!cfg.sizes.empty()) o.sizes = cfg.sizes;
            o.seed = cfg.seed;
            o.replicates = cfg.replicates;
            o.threads = cfg.threads;
            return run_l2_scaling(o);
        };
    }
    if (name == "example-separation") {
        return [cfg] {
            ExampleOptions o;
            o.convention = parse_lamp_convention(cfg.convention);
            return run_example_separation(o);
        };
    }
    if (name == "torus-entropy-remark" || name == "torus-remark") {
        return [cfg] {
            TorusRemarkOptions o;
            if (!cfg.sizes.empty()) o.sides = cfg.sizes;
            o.seed = cfg.seed;
            o.replicates = cfg.replicates;
            o.threads = cfg.threads;
            o.m = cfg.m;
            return run_torus_entropy_remark(o);
        };
    }
    if (name == "key-theorem") {
        return [cfg] {
            KeyTheoremSuiteOptions o;
            o.params.c = cfg.c;
            o.params.mode = parse_mode(cfg.mode);
            o.params.mc.replicates = cfg.replicates;
            o.params.mc.seed = cfg.seed;
            o.params.mc.threads = cfg.threads;
            o.params.subset.threads = cfg.threads;
            return run_key_theorem_instances(key_theorem_chains(), o);
        };
    }
    if (name == "coupon-explorer") {
        return [cfg] {
            CouponOptions o;
            o.tstar.mc.replicates = cfg.replicates;
            o.tstar.mc.seed = cfg.seed;
            o.tstar.mc.threads = cfg.threads;
            return run_coupon_explorer(o);
        };
    }
    throw Error(ErrorKind::Validation, "unknown experiment '" + name + "'");
}

const std::vector<std::string> kExperiments{"inequality-suite", "wreath-l2-scaling", "example-separation",
                                            "torus-entropy-remark", "key-theorem",      "coupon-explorer"};

Output cmd_verify(const RunConfig& cfg, std::ostream& err) {
    if (cfg.golden != "off" && cfg.golden != "compare" && cfg.golden != "freeze") {
        throw Error(ErrorKind::Validation, "--golden must be off, compare or freeze");
    }
    std::vector<std::string> names;
    if (cfg.experiment == "all") {
        names = kExperiments;
    } else {
        names = {cfg.experiment};
    }
    std::vector<std::function<ExperimentReport()>> jobs;
    for (const auto& name : names) jobs.push_back(experiment_job(name, cfg));
    const auto reports = run_jobs(jobs, 1);

    int code = 0;
    const auto dir = golden_dir(cfg.golden_dir);
    for (const auto& r : reports) {
        if (!r.passed()) code = 1;
        const auto file = dir / (r.id + ".json");
        if (cfg.golden == "freeze") {
            freeze_golden(r, file);
        } else if (cfg.golden == "compare") {
            const auto cmp = compare_golden(r, file);
            if (!cmp.found) {
                err << "golden missing: " << file.string() << '\n';
                code = 1;
            } else if (!cmp.matches) {
                err << "golden mismatch for " << r.id << ":\n";
                for (const auto& d : cmp.differences) err << "  " << d << '\n';
                code = 1;
            }
        }
    }
    if (cfg.csv) {
        std::string text;
        for (const auto& r : reports) text += r.rows_csv();
        return {text, code};
    }
    if (reports.size() == 1) return {reports[0].to_json().dump(2) + "\n", code};
    Json all = Json::array();
    for (const auto& r : reports) all.push_back(r.to_json());
    return {all.dump(2) + "\n", code};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Markov chain mixing, coverage and lamplighter toolkit", "mixlab"};
    app.require_subcommand(0, 1);
    RunConfig cfg;
    std::string config_path;
    bool dump_config = false;

    app.add_option("--config", config_path, "JSON run config; its values override flags");
    app.add_flag("--dump-config", dump_config, "print the effective run config and exit");
    app.add_option("--chain,--base", cfg.chain, "cycle:N, torus2d:N, hypercube:N, complete:N, complete-noloops:N or a file");
    app.add_option("--lazy", cfg.lazy, "holding probability for cycle, torus and hypercube builders");
    app.add_option("--seed", cfg.seed, "random seed");
    app.add_option("--replicates", cfg.replicates, "Monte Carlo replicates");
    app.add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
    app.add_flag("--csv", cfg.csv, "tabular output");
    app.add_option("--out", cfg.out, "write output to this file instead of stdout");
    app.add_option("--start", cfg.start, "start state (default: worst case, or state 0)");
    app.add_option("--tmax", cfg.tmax, "last time step");
    app.add_option("--metric", cfg.metric, "series columns: all, tv, l2, sep or entropy");
    app.add_option("--from", cfg.from, "Monte Carlo hitting time: start state");
    app.add_option("--to", cfg.to, "Monte Carlo hitting time: target state");
    app.add_option("--theta", cfg.theta, "MGF base");
    app.add_option("--delta", cfg.delta, "MGF threshold 1 + delta");
    app.add_option("--gamma", cfg.gamma, "visits required per state");
    app.add_option("--mode", cfg.mode, "auto, exact or mc");
    app.add_option("--c", cfg.c, "universal constant in t'");
    app.add_option("--m", cfg.m, "lamp alphabet size");
    app.add_option("--convention", cfg.convention, "both-endpoints, randomize-then-move or move-then-randomize");
    app.add_option("--family", cfg.family, "builder for explorer ladders");
    app.add_option("--sizes", cfg.sizes, "ladder sizes")->delimiter(',');
    app.add_option("--golden", cfg.golden, "off, compare or freeze");
    app.add_option("--golden-dir", cfg.golden_dir, "golden directory (MIXLAB_CACHE_DIR overrides)");

    auto* build = app.add_subcommand("build", "emit a chain as JSON");
    auto* spectral = app.add_subcommand("spectral", "eigenvalues, gap and relaxation time");
    auto* hitting = app.add_subcommand("hitting", "expected hitting times (exact, or Monte Carlo with --from/--to)");
    auto* metrics = app.add_subcommand("metrics", "distance series and mixing times");
    auto* coverage = app.add_subcommand("coverage", "uncovered-set MGFs, t*, key theorem, explorer");
    auto* lamplighter = app.add_subcommand("lamplighter", "wreath-chain distances via the coverage reduction");
    auto* verify = app.add_subcommand("verify", "run experiments and check their assertions");
    for (auto* sub : {build, spectral, hitting, metrics, coverage, lamplighter, verify}) sub->fallthrough();

    std::string action;
    auto add_actions = [&](CLI::App* parent, std::vector<std::string> names) {
        parent->require_subcommand(0, 1);
        for (const auto& name : names) {
            parent->add_subcommand(name)->fallthrough()->callback([&action, name] { action = name; });
        }
    };
    add_actions(metrics, {"series", "mixing"});
    add_actions(coverage, {"tstar", "mgf", "key-theorem", "explorer"});
    add_actions(lamplighter, {"series", "mixing"});
    verify->add_option("experiment", cfg.experiment,
                       "inequality-suite, wreath-l2-scaling, example-separation, torus-entropy-remark, key-theorem, "
                       "coupon-explorer or all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return 2;
    }

    for (auto* sub : app.get_subcommands()) {
        cfg.command = sub->get_name();
        for (auto* inner : sub->get_subcommands()) cfg.command += " " + inner->get_name();
    }

    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw Error(ErrorKind::Io, "cannot open config '" + config_path + "'");
            Json j;
            try {
                j = Json::parse(in);
            } catch (const Json::parse_error& e) {
                throw Error(ErrorKind::Io, std::string("cannot parse config: ") + e.what());
            }
            cfg = run_config_from_json(j, cfg);
        }
        if (dump_config) {
            out << run_config_to_json(cfg).dump(2) << '\n';
            return 0;
        }
        if (cfg.command.empty()) {
            err << "no subcommand given\n" << app.help();
            return 2;
        }
        const auto space = cfg.command.find(' ');
        const std::string head = cfg.command.substr(0, space);
        const std::string tail = space == std::string::npos ? "" : cfg.command.substr(space + 1);
        auto need_action = [&](const std::string& fallback) { return tail.empty() ? fallback : tail; };

        Output result;
        if (head == "build") {
            result = {chain_to_json(parse_chain_spec(cfg.chain, cfg.lazy)).dump(2) + "\n"};
        } else if (head == "spectral") {
            result = cmd_spectral(cfg);
        } else if (head == "hitting") {
            result = cmd_hitting(cfg);
        } else if (head == "metrics") {
            result = cmd_metrics(cfg, need_action("series"));
        } else if (head == "coverage") {
            result = cmd_coverage(cfg, need_action("tstar"));
        } else if (head == "lamplighter") {
            result = cmd_lamplighter(cfg, need_action("series"));
        } else if (head == "verify") {
            if (cfg.experiment.empty()) {
                err << "verify needs an experiment name\n" << verify->help();
                return 2;
            }
            result = cmd_verify(cfg, err);
        } else {
            err << "unknown command '" << cfg.command << "'\n";
            return 2;
        }

        if (cfg.out.empty()) {
            out << result.text;
        } else {
            std::ofstream file(cfg.out);
            if (!file) throw Error(ErrorKind::Io, "cannot write '" + cfg.out + "'");
            file << result.text;
        }
        return result.code;
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace mixlab
