#include "triage/report.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace fs = std::filesystem;

namespace triage {

using ojson = nlohmann::ordered_json;

// --- config ---

RunConfig config_from_json(const std::string& text) {
    ojson j = ojson::parse(text);
    RunConfig c;
    if (j.contains("dataset_paths"))
        c.dataset_paths = j["dataset_paths"].get<std::vector<std::string>>();
    c.chunk_size = j.value("chunk_size", std::size_t{30});
    if (c.chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
    if (j.contains("alphas")) c.alphas = j["alphas"].get<std::vector<double>>();
    for (double a : c.alphas)
        if (!(a > 0.0 && a <= 1.0)) throw ConfigError("alphas must lie in (0, 1]");
    if (j.contains("regimes")) {
        c.regimes.clear();
        for (const auto& r : j["regimes"])
            c.regimes.push_back(regime_from_string(r.get<std::string>()));
    }
    c.variant = variant_from_string(j.value("variant", std::string("A")));
    c.seed = j.value("seed", kDefaultSeed);
    c.samples = j.value("samples", kDefaultSamples);
    if (c.samples < 1) throw ConfigError("samples must be >= 1");
    c.output_dir = j.value("output_dir", std::string("out"));
    if (j.contains("endpoint")) {
        const auto& e = j["endpoint"];
        c.endpoint.base_url = e.value("base_url", std::string());
        c.endpoint.model_id = e.value("model_id", std::string());
        c.endpoint.mode = mode_from_string(e.value("mode", std::string("standard")));
        c.endpoint.api_key_env = e.value("api_key_env", std::string());
        c.endpoint.max_output_tokens =
            e.value("max_output_tokens", std::int64_t{8192});
        c.endpoint.request_timeout_sec = e.value("request_timeout_sec", 120);
    }
    if (j.contains("graders")) {
        for (const auto& [dataset, g] : j["graders"].items()) {
            GraderSpec spec;
            const std::string kind = g.value("kind", std::string("exact-match-normalized"));
            if (kind == "exact-match-normalized")
                spec.kind = GraderKind::ExactMatchNormalized;
            else if (kind == "multiple-choice-letter")
                spec.kind = GraderKind::MultipleChoiceLetter;
            else if (kind == "external-command")
                spec.kind = GraderKind::ExternalCommand;
            else
                throw ConfigError("unknown grader kind: " + kind);
            spec.answers_path = g.value("answers_path", std::string());
            spec.command = g.value("command", std::string());
            c.graders[dataset] = spec;
        }
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    return config_from_json(read_file(path));
}

std::string config_digest(const RunConfig& c) {
    std::ostringstream ss;
    for (const auto& p : c.dataset_paths) ss << p << ';';
    ss << c.chunk_size << ';';
    for (double a : c.alphas) ss << format_number(a) << ',';
    ss << ';';
    for (Regime r : c.regimes) ss << to_string(r);
    ss << ';' << to_string(c.variant) << ';' << c.seed << ';' << c.samples << ';'
       << c.endpoint.model_id << ';' << to_string(c.endpoint.mode);
    return fnv1a64_hex(ss.str());
}

Grader grader_for(const GraderSpec& spec,
                  const std::map<std::string, std::string>& answers,
                  const std::string& problem_id) {
    Grader g;
    g.kind = spec.kind;
    g.command = spec.command;
    if (spec.kind != GraderKind::ExternalCommand) {
        auto it = answers.find(problem_id);
        if (it == answers.end())
            throw GraderError("no answer key for problem: " + problem_id);
        g.answer_key = it->second;
    }
    return g;
}

std::map<std::string, std::string> load_answers(const std::string& path) {
    std::map<std::string, std::string> answers;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ojson j = ojson::parse(line);
        answers[j.at("id").get<std::string>()] = j.at("answer").get<std::string>();
    }
    return answers;
}

// --- scoring ---

std::vector<CellScore> score_pool(const TaskPool& pool,
                                  const std::string* raw_plan,
                                  const std::vector<Regime>& regimes,
                                  int samples, std::uint64_t seed) {
    ReferenceValues refs = random_reference(pool, samples, seed);
    const auto injected = injected_ids(pool);
    const std::set<std::string> unsolvable(injected.begin(), injected.end());

    ParseResult parsed;
    if (raw_plan != nullptr) parsed = parse_and_repair(*raw_plan, pool);
    const bool excluded = parsed.status == ParseStatus::Unparseable;

    std::vector<CellScore> rows;
    for (Regime regime : regimes) {
        CellScore row;
        row.pool_id = pool.id;
        row.dataset = pool.dataset;
        row.alpha = pool.alpha;
        row.regime = to_string(regime);
        row.v_oracle = refs.v_oracle;
        row.v_random = refs.v_random_mean;
        row.seed = seed;
        if (excluded) {
            row.parse_status = "excluded";
        } else {
            ExecutionTrace trace = execute(parsed.plan, pool, regime);
            row.v_model = trace.achieved_value;
            row.eta = eta(row.v_model, row.v_oracle, row.v_random);
            row.regret = regret(row.v_model, row.v_oracle);
            row.waste = waste_rate(parsed.plan, unsolvable);
            row.detection = detection_rate(parsed.plan, unsolvable);
            row.parse_status = to_string(parsed.status);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

struct AggregateKey {
    std::string dataset;
    double alpha;
    std::string regime;
    bool operator<(const AggregateKey& o) const {
        return std::tie(dataset, alpha, regime) <
               std::tie(o.dataset, o.alpha, o.regime);
    }
};

struct AggregateAcc {
    std::vector<std::optional<double>> eta, eta_positive_oracle, regret, waste,
        detection;
    int n_pools = 0;
    int n_excluded = 0;
};

std::string mean_or_na(const std::vector<std::optional<double>>& v) {
    try {
        return format_number(aggregate_cell(v));
    } catch (const AllExcluded&) {
        return "NA";
    }
}

std::string aggregate_csv(const std::vector<CellScore>& rows) {
    std::map<AggregateKey, AggregateAcc> groups;
    for (const auto& r : rows) {
        AggregateAcc& acc = groups[AggregateKey{r.dataset, r.alpha, r.regime}];
        ++acc.n_pools;
        if (r.parse_status == "excluded") {
            ++acc.n_excluded;
            continue;
        }
        acc.eta.push_back(r.eta);
        // the achievement-convention rows can also be aggregated with
        // zero-oracle pools left out; both views are emitted
        acc.eta_positive_oracle.push_back(r.v_oracle > 0 ? r.eta : std::nullopt);
        acc.regret.push_back(r.regret);
        acc.waste.push_back(r.waste);
        acc.detection.push_back(r.detection);
    }
    std::ostringstream out;
    out << "dataset,alpha,regime,n_pools,n_excluded,eta_mean,"
           "eta_mean_positive_oracle,regret_mean,waste_mean,detection_mean\n";
    for (const auto& [key, acc] : groups) {
        out << key.dataset << ',' << format_number(key.alpha) << ',' << key.regime
            << ',' << acc.n_pools << ',' << acc.n_excluded << ','
            << mean_or_na(acc.eta) << ',' << mean_or_na(acc.eta_positive_oracle)
            << ',' << mean_or_na(acc.regret) << ',' << mean_or_na(acc.waste)
            << ',' << mean_or_na(acc.detection) << '\n';
    }
    return out.str();
}

std::vector<fs::path> sorted_pool_files(const std::string& pools_dir) {
    if (!fs::is_directory(pools_dir))
        throw IoError("not a directory: " + pools_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(pools_dir)) {
        const fs::path& p = entry.path();
        if (p.extension() == ".json") files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    return files;
}

TaskPool load_pool_with_truth(const fs::path& pool_path) {
    TaskPool pool = load_pool(pool_path.string());
    fs::path truth_path = pool_path;
    truth_path.replace_extension(".truth.jsonl");
    if (!fs::exists(truth_path))
        throw MissingTruth(pool.id + " (no file " + truth_path.string() + ")");
    auto truth = load_truth(truth_path.string());
    for (const auto& p : pool.problems) {
        auto it = truth.find(p.id);
        if (it == truth.end()) throw MissingTruth(p.id);
        pool.truth[p.id] = it->second;
    }
    if (pool.alpha > 0) {
        TaskPool check = pool;
        compute_budget(check, pool.alpha);
        if (pool.budget == 0) {
            pool.budget = check.budget;
        } else if (pool.budget != check.budget) {
            throw ConfigError("stored budget disagrees with recomputation for " +
                              pool.id);
        }
    }
    return pool;
}

}  // namespace

ScoreOutcome cmd_score(const std::string& pools_dir, const std::string& plans_dir,
                       const std::string& out_dir, const RunConfig& config) {
    ScoreOutcome outcome;
    std::ostringstream exclusions;
    for (const fs::path& pool_path : sorted_pool_files(pools_dir)) {
        TaskPool pool = load_pool_with_truth(pool_path);
        fs::path plan_path = fs::path(plans_dir) / (pool.id + ".json");
        std::string raw;
        const std::string* raw_ptr = nullptr;
        if (fs::exists(plan_path)) {
            raw = read_file(plan_path.string());
            raw_ptr = &raw;
        }
        auto rows = score_pool(pool, raw_ptr, config.regimes, config.samples,
                               config.seed);
        const bool excluded = rows.empty() || rows.front().parse_status == "excluded";
        if (excluded) {
            ++outcome.pools_excluded;
            exclusions << pool.id << '\t'
                       << (raw_ptr == nullptr ? "missing-plan" : "unparseable")
                       << '\n';
        } else {
            ++outcome.pools_scored;
        }
        outcome.rows.insert(outcome.rows.end(), rows.begin(), rows.end());
    }

    std::string cells = cell_scores_csv_header();
    for (const auto& r : outcome.rows) cells += cell_score_csv_row(r);
    write_file((fs::path(out_dir) / "cells.csv").string(), cells);
    write_file((fs::path(out_dir) / "aggregate.csv").string(),
               aggregate_csv(outcome.rows));
    write_file((fs::path(out_dir) / "exclusions.txt").string(), exclusions.str());
    ojson meta;
    meta["config_digest"] = config_digest(config);
    meta["seed"] = config.seed;
    meta["samples"] = config.samples;
    write_file((fs::path(out_dir) / "metadata.json").string(), meta.dump(2) + "\n");
    return outcome;
}

// --- sweep ---

namespace {

std::string dataset_name(const std::string& dataset_path) {
    fs::path p(dataset_path);
    std::string stem = p.stem().string();
    // strip a trailing ".jsonl" stem artifact like "aime.problems"
    if (auto dot = stem.rfind(".problems"); dot != std::string::npos)
        stem = stem.substr(0, dot);
    return stem;
}

std::string sibling_truth_path(const std::string& dataset_path) {
    fs::path p(dataset_path);
    fs::path t = p.parent_path() / (p.stem().string() + ".truth.jsonl");
    if (fs::exists(t)) return t.string();
    // also accept dropping a ".problems" stem suffix
    fs::path alt = p.parent_path() / (dataset_name(dataset_path) + ".truth.jsonl");
    if (fs::exists(alt)) return alt.string();
    throw MissingTruth("no truth file next to " + dataset_path);
}

std::vector<TaskPool> build_pools(const std::string& dataset_path,
                                  std::size_t chunk_size) {
    const std::string name = dataset_name(dataset_path);
    auto problems = load_problems(dataset_path);
    for (auto& p : problems)
        if (p.dataset.empty()) p.dataset = name;
    auto pools = partition(problems, chunk_size);
    for (std::size_t i = 0; i < pools.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%03zu", i);
        pools[i].id = name + "-" + buf;
        pools[i].dataset = name;
    }
    return pools;
}

void attach_truth(TaskPool& pool,
                  const std::map<std::string, GroundTruth>& truth) {
    for (const auto& p : pool.problems) {
        auto it = truth.find(p.id);
        if (it == truth.end()) throw MissingTruth(p.id);
        pool.truth[p.id] = it->second;
    }
}

void write_pool_files(const TaskPool& pool, const fs::path& dir) {
    save_pool(pool, (dir / (pool.id + ".json")).string());
    save_truth(pool.truth, pool.dataset,
               (dir / (pool.id + ".truth.jsonl")).string());
}

}  // namespace

void cmd_sweep(const RunConfig& config, const std::string& plans_root,
               const std::string& out_root) {
    for (const auto& dataset_path : config.dataset_paths) {
        const std::string name = dataset_name(dataset_path);
        const auto truth = load_truth(sibling_truth_path(dataset_path));
        for (double alpha : config.alphas) {
            auto pools = build_pools(dataset_path, config.chunk_size);
            const std::string alpha_tag = "alpha-" + format_number(alpha);
            fs::path pools_dir = fs::path(out_root) / name / alpha_tag / "pools";
            fs::create_directories(pools_dir);
            for (auto& pool : pools) {
                attach_truth(pool, truth);
                compute_budget(pool, alpha);
                write_pool_files(pool, pools_dir);
            }
            fs::path plans_dir = fs::path(plans_root) / name / alpha_tag;
            for (Regime regime : config.regimes) {
                fs::path cell_dir =
                    fs::path(out_root) / name / alpha_tag / to_string(regime);
                if (fs::exists(cell_dir / "cells.csv")) continue;  // resume
                RunConfig cell_config = config;
                cell_config.regimes = {regime};
                cmd_score(pools_dir.string(), plans_dir.string(),
                          cell_dir.string(), cell_config);
            }
        }
    }
}

// --- injection study ---

std::vector<InjectionRow> cmd_inject(const RunConfig& config,
                                     const std::string& unsolvable_path,
                                     const std::vector<double>& ratios,
                                     const std::string& plans_root,
                                     const std::string& out_root) {
    auto unsolvables = load_problems(unsolvable_path);
    const auto unsolvable_truth = load_truth(sibling_truth_path(unsolvable_path));
    const double alpha = config.alphas.empty() ? 0.5 : config.alphas.front();

    std::vector<InjectionRow> rows;
    for (const auto& dataset_path : config.dataset_paths) {
        const std::string name = dataset_name(dataset_path);
        const auto truth = load_truth(sibling_truth_path(dataset_path));
        auto pools = build_pools(dataset_path, config.chunk_size);
        for (std::size_t pi = 0; pi < pools.size(); ++pi) {
            attach_truth(pools[pi], truth);
            for (double ratio : ratios) {
                TaskPool injected = inject_unsolvables(
                    pools[pi], unsolvables, ratio, derive_stream(config.seed, pi));
                for (const auto& p : injected.problems) {
                    if (injected.has_truth(p.id)) continue;
                    auto it = unsolvable_truth.find(p.id);
                    if (it == unsolvable_truth.end()) throw MissingTruth(p.id);
                    injected.truth[p.id] = it->second;
                }
                compute_budget(injected, alpha);
                const std::string ratio_tag = "r-" + format_number(ratio);
                fs::path pool_dir = fs::path(out_root) / name / ratio_tag / "pools";
                fs::create_directories(pool_dir);
                write_pool_files(injected, pool_dir);

                InjectionRow row;
                row.dataset = name;
                row.pool_id = injected.id;
                row.ratio = ratio;
                fs::path plan_path =
                    fs::path(plans_root) / name / ratio_tag / (injected.id + ".json");
                if (!fs::exists(plan_path)) {
                    row.parse_status = "excluded";
                } else {
                    ParseResult parsed =
                        parse_and_repair(read_file(plan_path.string()), injected);
                    if (parsed.status == ParseStatus::Unparseable) {
                        row.parse_status = "excluded";
                    } else {
                        const auto ids = injected_ids(injected);
                        const std::set<std::string> uset(ids.begin(), ids.end());
                        row.detection = detection_rate(parsed.plan, uset);
                        row.waste = waste_rate(parsed.plan, uset);
                        row.parse_status = to_string(parsed.status);
                    }
                }
                rows.push_back(std::move(row));
            }
        }
    }

    std::ostringstream csv;
    csv << "dataset,pool_id,ratio,detection,waste,parse_status\n";
    for (const auto& r : rows) {
        csv << r.dataset << ',' << r.pool_id << ',' << format_number(r.ratio)
            << ',' << format_optional(r.detection) << ','
            << format_optional(r.waste) << ',' << r.parse_status << '\n';
    }
    write_file((fs::path(out_root) / "injection_report.csv").string(), csv.str());

    // per-(dataset, ratio) means behind the (D, W) trajectories
    std::map<std::pair<std::string, double>,
             std::pair<std::vector<std::optional<double>>,
                       std::vector<std::optional<double>>>>
        groups;
    for (const auto& r : rows) {
        if (r.parse_status == "excluded") continue;
        auto& g = groups[{r.dataset, r.ratio}];
        g.first.push_back(r.detection);
        g.second.push_back(r.waste);
    }
    std::ostringstream agg;
    agg << "dataset,ratio,detection_mean,waste_mean\n";
    for (const auto& [key, g] : groups) {
        agg << key.first << ',' << format_number(key.second) << ','
            << mean_or_na(g.first) << ',' << mean_or_na(g.second) << '\n';
    }
    write_file((fs::path(out_root) / "injection_aggregate.csv").string(),
               agg.str());
    return rows;
}

// --- merged report ---

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

std::optional<double> parse_metric(const std::string& s) {
    if (s == "NA" || s.empty()) return std::nullopt;
    return std::stod(s);
}

}  // namespace

void cmd_report(const std::string& cells_dir, const std::string& out_dir,
                bool weighted) {
    struct Group {
        std::vector<std::optional<double>> eta, regret, waste, detection;
    };
    // key: dataset, alpha, regime
    std::map<std::tuple<std::string, std::string, std::string>, Group> groups;

    if (!fs::is_directory(cells_dir))
        throw IoError("not a directory: " + cells_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(cells_dir))
        if (entry.path().filename() == "cells.csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        std::istringstream in(read_file(file.string()));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto f = split_csv_line(line);
            if (f.size() < 13 || f[11] == "excluded") continue;
            Group& g = groups[{f[0], f[2], f[3]}];
            g.eta.push_back(parse_metric(f[7]));
            g.regret.push_back(parse_metric(f[8]));
            g.waste.push_back(parse_metric(f[9]));
            g.detection.push_back(parse_metric(f[10]));
        }
    }
    if (groups.empty()) throw AllExcluded("no scoreable rows under " + cells_dir);

    struct SummaryRow {
        std::string dataset, alpha, regime, metric;
        std::string value;
        int n = 0;
    };
    std::vector<SummaryRow> summary;
    auto emit = [&](const std::string& ds, const std::string& alpha,
                    const std::string& regime, const std::string& metric,
                    const std::vector<std::optional<double>>& values) {
        int defined = 0;
        for (const auto& v : values)
            if (v.has_value()) ++defined;
        summary.push_back(SummaryRow{ds, alpha, regime, metric,
                                     mean_or_na(values), defined});
    };
    for (const auto& [key, g] : groups) {
        const auto& [ds, alpha, regime] = key;
        emit(ds, alpha, regime, "eta", g.eta);
        emit(ds, alpha, regime, "regret", g.regret);
        emit(ds, alpha, regime, "waste", g.waste);
        emit(ds, alpha, regime, "detection", g.detection);
    }
    // cross-dataset merge per (alpha, regime); weighting is by each
    // dataset's pool count when requested
    std::map<std::pair<std::string, std::string>,
             std::vector<std::pair<double, std::optional<double>>>>
        merged_eta;
    for (const auto& [key, g] : groups) {
        const auto& [ds, alpha, regime] = key;
        (void)ds;
        double weight = weighted ? static_cast<double>(g.eta.size()) : 1.0;
        try {
            merged_eta[{alpha, regime}].push_back({weight, aggregate_cell(g.eta)});
        } catch (const AllExcluded&) {
            merged_eta[{alpha, regime}].push_back({weight, std::nullopt});
        }
    }
    for (const auto& [key, entries] : merged_eta) {
        std::vector<std::optional<double>> values;
        std::vector<double> weights;
        for (const auto& [w, v] : entries) {
            values.push_back(v);
            weights.push_back(w);
        }
        std::string value;
        int defined = 0;
        for (const auto& v : values)
            if (v.has_value()) ++defined;
        try {
            value = format_number(aggregate_cell(values, &weights));
        } catch (const AllExcluded&) {
            value = "NA";
        }
        summary.push_back(SummaryRow{"ALL", key.first, key.second,
                                     weighted ? "eta_weighted" : "eta", value,
                                     defined});
    }

    std::ostringstream csv;
    csv << "dataset,alpha,regime,metric,value,n_pools\n";
    ojson jrows = ojson::array();
    for (const auto& r : summary) {
        csv << r.dataset << ',' << r.alpha << ',' << r.regime << ',' << r.metric
            << ',' << r.value << ',' << r.n << '\n';
        ojson jr;
        jr["dataset"] = r.dataset;
        jr["alpha"] = r.alpha;
        jr["regime"] = r.regime;
        jr["metric"] = r.metric;
        jr["value"] = r.value;
        jr["n_pools"] = r.n;
        jrows.push_back(std::move(jr));
    }
    write_file((fs::path(out_dir) / "summary.csv").string(), csv.str());
    write_file((fs::path(out_dir) / "summary.json").string(),
               jrows.dump(2) + "\n");
}

}  // namespace triage
