#include "gasfl/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "gasfl/error.hpp"
#include "gasfl/hfl.hpp"
#include "gasfl/vfl.hpp"

namespace gasfl {

namespace fs = std::filesystem;

namespace {

const CsvSchema company_schema{{"temperature", "wind"}, "usage", false};
const CsvSchema station_schema{{"strategy"}, "usage", true};

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ConfigError("unknown field '" + key + "' in " + where);
    }
}

void apply_gen_overrides(GenSpec& spec, const nlohmann::json& j, const std::string& where) {
    reject_unknown(j,
                   {"days", "base_usage", "temp_sensitivity", "strategy_mode", "noise_std", "start_date",
                    "heating_threshold", "mean_temperature", "temperature_amplitude", "temperature_noise",
                    "strategy_noise", "strategy_coupling"},
                   where);
    spec.days = get_or(j, "days", spec.days);
    spec.base_usage = get_or(j, "base_usage", spec.base_usage);
    spec.temp_sensitivity = get_or(j, "temp_sensitivity", spec.temp_sensitivity);
    if (j.contains("strategy_mode")) spec.strategy_mode = strategy_mode_from_string(j.at("strategy_mode").get<std::string>());
    spec.noise_std = get_or(j, "noise_std", spec.noise_std);
    if (j.contains("start_date")) {
        const auto text = j.at("start_date").get<std::string>();
        const auto d = parse_iso_date(text);
        if (!d) throw ConfigError("invalid start_date '" + text + "' in " + where);
        spec.start_date = *d;
    }
    spec.heating_threshold = get_or(j, "heating_threshold", spec.heating_threshold);
    spec.mean_temperature = get_or(j, "mean_temperature", spec.mean_temperature);
    spec.temperature_amplitude = get_or(j, "temperature_amplitude", spec.temperature_amplitude);
    spec.temperature_noise = get_or(j, "temperature_noise", spec.temperature_noise);
    spec.strategy_noise = get_or(j, "strategy_noise", spec.strategy_noise);
    spec.strategy_coupling = get_or(j, "strategy_coupling", spec.strategy_coupling);
}

ojson gen_spec_to_json(const GenSpec& s) {
    ojson j;
    j["days"] = s.days;
    j["base_usage"] = s.base_usage;
    j["temp_sensitivity"] = s.temp_sensitivity;
    j["strategy_mode"] = to_string(s.strategy_mode);
    j["noise_std"] = s.noise_std;
    j["start_date"] = format_iso_date(s.start_date);
    j["heating_threshold"] = s.heating_threshold;
    j["mean_temperature"] = s.mean_temperature;
    j["temperature_amplitude"] = s.temperature_amplitude;
    j["temperature_noise"] = s.temperature_noise;
    j["strategy_noise"] = s.strategy_noise;
    j["strategy_coupling"] = s.strategy_coupling;
    return j;
}

DataSource parse_source(const nlohmann::json& j, const std::string& where) {
    DataSource src;
    if (!j.contains("data")) {
        src.generate = nlohmann::json::object();
        return src;
    }
    const auto& d = j.at("data");
    reject_unknown(d, {"generate", "csv"}, where + ".data");
    if (d.contains("generate") == d.contains("csv")) {
        throw ConfigError(where + ".data needs exactly one of 'generate' or 'csv'");
    }
    if (d.contains("csv")) {
        src.csv = d.at("csv").get<std::string>();
    } else {
        src.generate = d.at("generate");
        if (!src.generate->is_object()) throw ConfigError(where + ".data.generate must be an object");
    }
    return src;
}

RewardPools parse_pools(const nlohmann::json& j, RewardPools fallback, const std::string& where) {
    reject_unknown(j, {"r_data", "r_model"}, where);
    return {get_or(j, "r_data", fallback.r_data), get_or(j, "r_model", fallback.r_model)};
}

ScoreOverride parse_override(const nlohmann::json& j, const std::string& where) {
    reject_unknown(j, {"quality", "contribution"}, where);
    ScoreOverride o;
    if (j.contains("quality")) o.quality = j.at("quality").get<double>();
    if (j.contains("contribution")) o.contribution = j.at("contribution").get<double>();
    return o;
}

ojson override_to_json(const ScoreOverride& o) {
    ojson j = ojson::object();
    if (o.quality) j["quality"] = *o.quality;
    if (o.contribution) j["contribution"] = *o.contribution;
    return j;
}

fs::path resolve(const ScenarioConfig& config, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() || config.base_dir.empty() ? p : config.base_dir / p;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

TimeSeriesDataset rename_features(const TimeSeriesDataset& ds, const std::string& prefix) {
    std::vector<std::string> names;
    for (const auto& n : ds.feature_names()) names.push_back(prefix + n);
    return {ds.dates(), ds.features(), std::move(names), ds.maybe_target(), ds.target_name()};
}

double sum_of(const std::vector<ScoreCard>& cards, double ScoreCard::*field) {
    double s = 0.0;
    for (const auto& c : cards) s += c.*field;
    return s;
}

void check_cohort(const std::string& label, const std::vector<ScoreCard>& cards, const RewardPools& pools,
                  std::vector<std::string>& failed) {
    if (std::abs(sum_of(cards, &ScoreCard::quality_norm) - 1.0) > 1e-9) failed.push_back(label + ": quality_norm sum");
    if (std::abs(sum_of(cards, &ScoreCard::contribution_norm) - 1.0) > 1e-9) {
        failed.push_back(label + ": contribution_norm sum");
    }
    if (std::abs(sum_of(cards, &ScoreCard::r_quality) - pools.r_data) > 1e-9 * std::max(1.0, pools.r_data)) {
        failed.push_back(label + ": data pool not conserved");
    }
    if (std::abs(sum_of(cards, &ScoreCard::r_contribution) - pools.r_model) > 1e-9 * std::max(1.0, pools.r_model)) {
        failed.push_back(label + ": model pool not conserved");
    }
}

Payload reward_payload(const ScoreCard& c) {
    return {c.quality_norm, c.contribution_norm, c.r_quality, c.r_contribution};
}

}  // namespace

std::size_t EvalWindow::rows_for(std::size_t rows) const {
    if (days) return static_cast<std::size_t>(*days);
    const double f = fraction.value_or(0.2);
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(f * static_cast<double>(rows))));
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j, fs::path base_dir) {
    try {
        reject_unknown(j,
                       {"scenario", "seed", "train", "hfl_rounds", "vfl_rounds", "tiers", "eval_window", "pools",
                        "companies", "score_overrides", "output_dir"},
                       "scenario config");
        ScenarioConfig c;
        c.base_dir = std::move(base_dir);
        c.scenario = get_or<std::string>(j, "scenario", c.scenario);
        c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
        if (j.contains("train")) {
            const auto& t = j.at("train");
            reject_unknown(t, {"learning_rate", "epochs_per_round", "l2", "standardize"}, "train");
            c.train.learning_rate = get_or(t, "learning_rate", c.train.learning_rate);
            c.train.epochs = get_or(t, "epochs_per_round", 5);
            c.train.l2 = get_or(t, "l2", c.train.l2);
            c.train.standardize = get_or(t, "standardize", c.train.standardize);
        } else {
            c.train.epochs = 5;
        }
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.hfl_rounds = get_or(j, "hfl_rounds", c.hfl_rounds);
        c.vfl_rounds = get_or(j, "vfl_rounds", c.vfl_rounds);
        if (j.contains("tiers")) {
            reject_unknown(j.at("tiers"), {"hfl", "vfl"}, "tiers");
            c.run_hfl = get_or(j.at("tiers"), "hfl", true);
            c.run_vfl = get_or(j.at("tiers"), "vfl", true);
        }
        if (j.contains("eval_window")) {
            const auto& w = j.at("eval_window");
            reject_unknown(w, {"days", "fraction"}, "eval_window");
            if (w.contains("days") == w.contains("fraction")) {
                throw ConfigError("eval_window needs exactly one of 'days' or 'fraction'");
            }
            c.eval_window = {};
            if (w.contains("days")) c.eval_window.days = w.at("days").get<int>();
            if (w.contains("fraction")) c.eval_window.fraction = w.at("fraction").get<double>();
        }
        if (j.contains("pools")) {
            const auto& p = j.at("pools");
            reject_unknown(p, {"hfl", "vfl"}, "pools");
            if (p.contains("hfl")) c.hfl_pools = parse_pools(p.at("hfl"), c.hfl_pools, "pools.hfl");
            if (p.contains("vfl")) c.vfl_pools = parse_pools(p.at("vfl"), c.vfl_pools, "pools.vfl");
        }
        for (const auto& cj : j.value("companies", nlohmann::json::array())) {
            reject_unknown(cj, {"id", "data", "stations"}, "company");
            CompanyConfig company;
            company.id = cj.at("id").get<std::string>();
            company.data = parse_source(cj, "company '" + company.id + "'");
            for (const auto& sj : cj.value("stations", nlohmann::json::array())) {
                reject_unknown(sj, {"id", "data"}, "station");
                StationConfig station;
                station.id = sj.at("id").get<std::string>();
                station.data = parse_source(sj, "station '" + station.id + "'");
                company.stations.push_back(std::move(station));
            }
            c.companies.push_back(std::move(company));
        }
        if (j.contains("score_overrides")) {
            const auto& o = j.at("score_overrides");
            reject_unknown(o, {"hfl", "vfl"}, "score_overrides");
            if (o.contains("hfl")) {
                for (const auto& [id, v] : o.at("hfl").items()) c.hfl_overrides[id] = parse_override(v, "override " + id);
            }
            if (o.contains("vfl")) {
                for (const auto& [company, members] : o.at("vfl").items()) {
                    for (const auto& [id, v] : members.items()) {
                        c.vfl_overrides[company][id] = parse_override(v, "override " + id);
                    }
                }
            }
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scenario config: ") + e.what());
    }
}

ojson ScenarioConfig::to_json() const {
    ojson j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["train"] = {{"learning_rate", train.learning_rate},
                  {"epochs_per_round", train.epochs},
                  {"l2", train.l2},
                  {"standardize", train.standardize}};
    j["hfl_rounds"] = hfl_rounds;
    j["vfl_rounds"] = vfl_rounds;
    j["tiers"] = {{"hfl", run_hfl}, {"vfl", run_vfl}};
    ojson w = ojson::object();
    if (eval_window.days) w["days"] = *eval_window.days;
    if (eval_window.fraction) w["fraction"] = *eval_window.fraction;
    j["eval_window"] = std::move(w);
    j["pools"] = {{"hfl", {{"r_data", hfl_pools.r_data}, {"r_model", hfl_pools.r_model}}},
                  {"vfl", {{"r_data", vfl_pools.r_data}, {"r_model", vfl_pools.r_model}}}};
    ojson companies_json = ojson::array();
    for (const auto& company : companies) {
        ojson cj;
        cj["id"] = company.id;
        if (company.data.csv) {
            cj["data"] = {{"csv", *company.data.csv}};
        } else {
            cj["data"] = {{"generate", gen_spec_to_json(company_gen_spec(*this, company))}};
        }
        ojson stations = ojson::array();
        for (const auto& station : company.stations) {
            ojson sj;
            sj["id"] = station.id;
            if (station.data.csv) {
                sj["data"] = {{"csv", *station.data.csv}};
            } else {
                sj["data"] = {{"generate", gen_spec_to_json(station_gen_spec(*this, company, station))}};
            }
            stations.push_back(std::move(sj));
        }
        cj["stations"] = std::move(stations);
        companies_json.push_back(std::move(cj));
    }
    j["companies"] = std::move(companies_json);
    ojson overrides = ojson::object();
    if (!hfl_overrides.empty()) {
        ojson h = ojson::object();
        for (const auto& [id, o] : hfl_overrides) h[id] = override_to_json(o);
        overrides["hfl"] = std::move(h);
    }
    if (!vfl_overrides.empty()) {
        ojson v = ojson::object();
        for (const auto& [company, members] : vfl_overrides) {
            ojson m = ojson::object();
            for (const auto& [id, o] : members) m[id] = override_to_json(o);
            v[company] = std::move(m);
        }
        overrides["vfl"] = std::move(v);
    }
    if (!overrides.empty()) j["score_overrides"] = std::move(overrides);
    if (output_dir) j["output_dir"] = *output_dir;
    return j;
}

HierarchyConfig ScenarioConfig::hierarchy() const {
    HierarchyConfig h;
    for (const auto& c : companies) {
        h.companies.push_back(c.id);
        auto& stations = h.stations_by_company[c.id];
        for (const auto& s : c.stations) stations.push_back(s.id);
    }
    h.pools = hfl_pools;
    return h;
}

void ScenarioConfig::validate() const {
    train.validate();
    if (!run_hfl && !run_vfl) throw ConfigError("at least one tier must be enabled");
    if (companies.empty()) throw ConfigError("scenario lists no companies");
    hierarchy().validate(run_hfl, run_vfl);
    if (vfl_pools.r_data < 0.0 || vfl_pools.r_model < 0.0) throw ConfigError("reward pools must be non-negative");
    if (run_hfl && hfl_rounds < 1) throw ConfigError("hfl_rounds must be >= 1");
    if (run_vfl && vfl_rounds < 1) throw ConfigError("vfl_rounds must be >= 1");
    if (eval_window.days && *eval_window.days < 2) throw ConfigError("evaluation window must cover at least 2 days");
    if (eval_window.fraction && !(*eval_window.fraction > 0.0 && *eval_window.fraction < 1.0)) {
        throw ConfigError("eval_window.fraction must lie in (0, 1)");
    }
    if (hfl_pools.r_data < 0.0 || hfl_pools.r_model < 0.0) throw ConfigError("reward pools must be non-negative");
    for (const auto& company : companies) {
        auto check_source = [&](const DataSource& src, const std::string& who) {
            if (src.csv && !fs::exists(resolve(*this, *src.csv))) {
                throw ConfigError("data file for '" + who + "' not found: " + resolve(*this, *src.csv).string());
            }
        };
        check_source(company.data, company.id);
        if (company.data.generate) company_gen_spec(*this, company).validate();
        for (const auto& station : company.stations) {
            check_source(station.data, station.id);
            if (station.data.generate) station_gen_spec(*this, company, station).validate();
        }
    }
    for (const auto& [id, o] : hfl_overrides) {
        if (std::none_of(companies.begin(), companies.end(), [&](const auto& c) { return c.id == id; })) {
            throw ConfigError("score override for unknown company '" + id + "'");
        }
    }
}

ScenarioConfig load_scenario(const fs::path& path) {
    const auto text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return ScenarioConfig::from_json(j, path.parent_path());
}

GenSpec company_gen_spec(const ScenarioConfig& config, const CompanyConfig& company) {
    GenSpec spec;
    if (company.data.generate) apply_gen_overrides(spec, *company.data.generate, "company '" + company.id + "'");
    spec.seed = derive_seed(config.seed, "company:" + company.id);
    return spec;
}

GenSpec station_gen_spec(const ScenarioConfig& config, const CompanyConfig& company, const StationConfig& station) {
    GenSpec spec = company_gen_spec(config, company);
    spec.strategy_mode = StrategyMode::truthful;
    if (station.data.generate) apply_gen_overrides(spec, *station.data.generate, "station '" + station.id + "'");
    spec.seed = derive_seed(config.seed, "station:" + station.id);
    return spec;
}

std::vector<CompanyData> build_data(const ScenarioConfig& config) {
    std::vector<CompanyData> out;
    for (const auto& company : config.companies) {
        std::optional<TimeSeriesDataset> weather;
        std::optional<TimeSeriesDataset> loaded_company;
        GenSpec company_spec = company_gen_spec(config, company);
        if (company.data.csv) {
            loaded_company = load_csv(resolve(config, *company.data.csv), company_schema);
            weather = loaded_company->without_target();
        } else {
            weather = generate_weather(company_spec);
        }

        std::map<std::string, TimeSeriesDataset> stations;
        std::vector<Vector> executed;
        for (const auto& station : company.stations) {
            if (station.data.csv) {
                auto ds = load_csv(resolve(config, *station.data.csv), station_schema);
                if (ds.has_target()) throw ConfigError("station '" + station.id + "' CSV must not carry usage");
                stations.emplace(station.id, std::move(ds));
                continue;
            }
            GenSpec spec = station_gen_spec(config, company, station);
            GenSpec truthful = spec;
            truthful.strategy_mode = StrategyMode::truthful;
            // The executed plan always drives usage; what the station reports depends on its mode.
            auto plan = generate_strategy(truthful, *weather);
            executed.push_back(plan.features().col(0) * (spec.strategy_coupling / company_spec.strategy_coupling));
            stations.emplace(station.id,
                             spec.strategy_mode == StrategyMode::truthful ? plan : generate_strategy(spec, *weather));
        }

        TimeSeriesDataset dataset = loaded_company ? *loaded_company : [&] {
            Matrix plans(static_cast<Eigen::Index>(weather->rows()), static_cast<Eigen::Index>(executed.size()));
            std::vector<std::string> names;
            for (std::size_t k = 0; k < executed.size(); ++k) {
                plans.col(static_cast<Eigen::Index>(k)) = executed[k];
                names.push_back("plan" + std::to_string(k));
            }
            const TimeSeriesDataset plan_ds(weather->dates(), std::move(plans), std::move(names));
            return weather->with_target(generate_usage(company_spec, *weather, plan_ds));
        }();
        out.push_back({company.id, std::move(dataset), std::move(stations)});
    }
    return out;
}

GenDataResult gen_data(const ScenarioConfig& config, const fs::path& out_dir) {
    config.validate();
    const auto data = build_data(config);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());

    GenDataResult result;
    ojson manifest;
    manifest["scenario"] = config.scenario;
    manifest["seed"] = config.seed;
    ojson files = ojson::array();
    for (std::size_t ci = 0; ci < data.size(); ++ci) {
        const auto& company_cfg = config.companies[ci];
        const auto& company = data[ci];
        auto add = [&](const std::string& id, const char* tier, const TimeSeriesDataset& ds, const DataSource& src,
                       std::optional<GenSpec> spec) {
            const auto file = out_dir / (id + ".csv");
            write_csv(ds, file);
            result.files.push_back(file);
            ojson entry;
            entry["participant"] = id;
            entry["tier"] = tier;
            entry["file"] = id + ".csv";
            entry["rows"] = ds.rows();
            if (src.csv) {
                entry["source"] = *src.csv;
            } else {
                entry["seed"] = spec->seed;
                entry["strategy_mode"] = to_string(spec->strategy_mode);
            }
            files.push_back(std::move(entry));
        };
        add(company.id, "company", company.dataset, company_cfg.data, company_gen_spec(config, company_cfg));
        for (const auto& station_cfg : company_cfg.stations) {
            add(station_cfg.id, "station", company.stations.at(station_cfg.id), station_cfg.data,
                station_gen_spec(config, company_cfg, station_cfg));
        }
    }
    manifest["files"] = std::move(files);
    result.manifest = out_dir / "manifest.json";
    write_file(result.manifest, manifest.dump(2) + "\n");
    return result;
}

SimulationOutcome simulate(const ScenarioConfig& config, bool full_transcript) {
    config.validate();
    const auto data = build_data(config);

    SimulationOutcome outcome;
    Diagnostics diag;
    Network network(config.scenario, config.seed, full_transcript);
    std::ostringstream metrics;
    metrics << "round,participant,loss\n";

    struct Prepared {
        std::string id;
        VflGroup train;
        VflGroup eval;
    };
    std::vector<Prepared> groups;
    for (const auto& company : data) {
        std::vector<TimeSeriesDataset> parts{company.dataset};
        std::vector<std::string> station_ids;
        for (const auto& [id, ds] : company.stations) {
            parts.push_back(rename_features(ds, id + ":"));
            station_ids.push_back(id);
        }
        const auto aligned = align_by_date(parts);
        const auto rows = aligned.front().rows();
        const auto eval_rows = config.eval_window.rows_for(rows);
        if (eval_rows + 2 > rows) {
            throw ConfigError("company '" + company.id + "' has " + std::to_string(rows) +
                              " aligned rows, too few for a " + std::to_string(eval_rows) + "-day evaluation window");
        }
        std::vector<Participant> passives;
        for (std::size_t k = 0; k < station_ids.size(); ++k) {
            passives.emplace_back(station_ids[k], Tier::station, Role::passive, aligned[k + 1]);
        }
        VflGroup group(Participant(company.id, Tier::company, Role::active, aligned.front()), std::move(passives));
        for (const auto* m : group.members()) outcome.fingerprints.merge(raw_fingerprints(m->dataset()));
        const auto train_rows = rows - eval_rows;
        auto train = group.slice_rows(0, train_rows);
        auto eval = group.slice_rows(train_rows, eval_rows);
        for (const auto* m : train.members()) outcome.fingerprints.merge(raw_fingerprints(m->dataset()));
        for (const auto* m : eval.members()) outcome.fingerprints.merge(raw_fingerprints(m->dataset()));
        groups.push_back({company.id, std::move(train), std::move(eval)});
    }

    ojson vfl_json = ojson::object();
    if (config.run_vfl) {
        for (const auto& g : groups) {
            const auto result = run_vfl(g.train, config.vfl_rounds, config.train, network, &diag);
            for (const auto& log : result.logs) {
                metrics << log.round << ",vfl/" << g.id << ',' << format_double(log.loss) << '\n';
            }
            const auto forecasts = forecast_vfl(g.eval, result, network, network.current_round() + 1);

            std::vector<CohortMember> cohort;
            for (const auto* m : g.train.members()) {
                cohort.push_back({m->id(), m->dataset().features(), g.train.active().dataset().target(),
                                  m->sample_count(), forecasts.local.at(m->id()), forecasts.global, forecasts.actual});
            }
            const auto overrides = config.vfl_overrides.find(g.id);
            auto cards = evaluate_cohort(cohort, CohortKind::vfl, config.vfl_pools, &diag,
                                         overrides == config.vfl_overrides.end() ? nullptr : &overrides->second);
            const int report_round = network.current_round();
            for (const auto& card : cards) {
                if (card.participant != g.id) {
                    network.send(g.id, card.participant, report_round, MessageKind::score_report, reward_payload(card));
                    network.receive(card.participant);
                }
            }
            check_cohort("vfl/" + g.id, cards, config.vfl_pools, outcome.failed_checks);
            vfl_json[g.id] = {{"scorecards", scorecards_to_json(cards)},
                              {"model", params_to_json(result.combined())},
                              {"train_rows", g.train.rows()},
                              {"eval_rows", g.eval.rows()}};
            outcome.vfl_cards.emplace(g.id, std::move(cards));
        }
    }

    ojson hfl_json = ojson::object();
    if (config.run_hfl) {
        std::vector<Participant> companies;
        for (const auto& g : groups) {
            companies.emplace_back(g.id, Tier::company, Role::active, g.train.active().dataset());
        }
        const auto result = run_hfl(companies, config.hfl_rounds, config.train, network, &diag);
        outcome.hfl_rounds_jsonl = hfl_logs_to_jsonl(result.logs);
        for (const auto& log : result.logs) {
            for (const auto& [id, loss] : log.local_loss) {
                metrics << log.round << ",hfl/" << id << ',' << format_double(loss) << '\n';
            }
        }
        if (full_transcript) {
            std::map<std::string, std::size_t> counts;
            for (const auto& c : companies) counts[c.id()] = c.sample_count();
            const auto replay = replay_hfl_aggregation(network.transcript(), counts, result.first_network_round,
                                                       result.last_network_round);
            if (!replay.consistent) outcome.failed_checks.push_back("hfl: transcript replay mismatch");
        }

        const int report_round = network.current_round() + 1;
        std::vector<CohortMember> cohort;
        for (const auto& g : groups) {
            const auto& eval_ds = g.eval.active().dataset();
            CohortMember m{g.id,
                           g.train.active().dataset().features(),
                           g.train.active().dataset().target(),
                           g.train.rows(),
                           predict(result.locals.at(g.id), eval_ds.features()),
                           predict(result.global, eval_ds.features()),
                           eval_ds.target()};
            network.send(g.id, hfl_server_id, report_round, MessageKind::score_report,
                         {smape_new(m.local_forecast, m.actual), smape_new(m.global_forecast, m.actual)});
            cohort.push_back(std::move(m));
        }
        network.receive(hfl_server_id);
        auto cards = evaluate_cohort(cohort, CohortKind::hfl, config.hfl_pools, &diag,
                                     config.hfl_overrides.empty() ? nullptr : &config.hfl_overrides);
        for (const auto& card : cards) {
            network.send(hfl_server_id, card.participant, report_round, MessageKind::score_report, reward_payload(card));
            network.receive(card.participant);
        }
        check_cohort("hfl", cards, config.hfl_pools, outcome.failed_checks);
        hfl_json["scorecards"] = scorecards_to_json(cards);
        hfl_json["global_model"] = params_to_json(result.global);
        ojson locals = ojson::object();
        for (const auto& [id, p] : result.locals) locals[id] = params_to_json(p);
        hfl_json["local_models"] = std::move(locals);
        hfl_json["rounds"] = config.hfl_rounds;
        outcome.hfl_cards = std::move(cards);
    } else {
        hfl_json["scorecards"] = ojson::array();
    }

    outcome.transcript = network.transcript();
    outcome.privacy = assert_privacy(outcome.transcript, outcome.fingerprints);
    if (!outcome.privacy.passed) outcome.failed_checks.push_back("privacy: raw data digest found in transcript");
    outcome.warnings = diag.warnings;

    double paid_data = 0.0, paid_model = 0.0;
    auto add_paid = [&](const std::vector<ScoreCard>& cards) {
        paid_data += sum_of(cards, &ScoreCard::r_quality);
        paid_model += sum_of(cards, &ScoreCard::r_contribution);
    };
    add_paid(outcome.hfl_cards);
    for (const auto& [id, cards] : outcome.vfl_cards) add_paid(cards);

    ojson seeds = ojson::object();
    for (const auto& company : config.companies) {
        if (company.data.generate) seeds[company.id] = company_gen_spec(config, company).seed;
        for (const auto& station : company.stations) {
            if (station.data.generate) seeds[station.id] = station_gen_spec(config, company, station).seed;
        }
    }

    ojson& report = outcome.report;
    report["scenario"] = config.scenario;
    report["seed"] = config.seed;
    report["hfl"] = std::move(hfl_json);
    report["vfl"] = std::move(vfl_json);
    report["totals"] = {{"paid_data", paid_data}, {"paid_model", paid_model}};
    ojson offending = ojson::array();
    for (const auto s : outcome.privacy.offending_seqs) offending.push_back(s);
    report["checks"] = {{"passed", outcome.ok()},
                        {"failed", outcome.failed_checks},
                        {"privacy", {{"passed", outcome.privacy.passed}, {"offending_seqs", std::move(offending)}}},
                        {"messages", outcome.transcript.messages.size()}};
    report["warnings"] = outcome.warnings;
    report["participant_seeds"] = std::move(seeds);
    report["config"] = config.to_json();

    std::ostringstream csv;
    csv << "tier,cohort";
    for (const auto& col : scorecard_columns()) csv << ',' << col;
    csv << '\n';
    for (const auto& [id, cards] : outcome.vfl_cards) {
        for (const auto& c : cards) csv << "vfl," << id << ',' << scorecard_csv_row(c) << '\n';
    }
    for (const auto& c : outcome.hfl_cards) csv << "hfl,federation," << scorecard_csv_row(c) << '\n';
    outcome.scorecards_csv = csv.str();
    outcome.metrics_csv = metrics.str();
    return outcome;
}

void write_outcome(const SimulationOutcome& outcome, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());
    write_file(out_dir / "report.json", outcome.report.dump(2) + "\n");
    write_file(out_dir / "scorecards.csv", outcome.scorecards_csv);
    write_file(out_dir / "transcript.jsonl", outcome.transcript.to_jsonl());
    write_file(out_dir / "metrics.csv", outcome.metrics_csv);
    write_file(out_dir / "hfl_rounds.jsonl", outcome.hfl_rounds_jsonl);
}

std::vector<ExternalScore> parse_scores_csv(std::string_view text) {
    std::vector<ExternalScore> out;
    std::size_t start = 0;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        auto line = text.substr(start, pos - start);
        start = pos + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss{std::string(line)};
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (!header_seen) {
            if (cells != std::vector<std::string>{"id", "quality", "contribution"}) {
                throw ParseError("header must be 'id,quality,contribution'", line_no);
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != 3) throw ParseError("expected 3 cells, found " + std::to_string(cells.size()), line_no);
        if (cells[0].empty()) throw ParseError("empty participant id", line_no);
        ExternalScore s{cells[0], 0.0, 0.0};
        for (int k = 1; k <= 2; ++k) {
            const auto& c = cells[static_cast<std::size_t>(k)];
            double v = 0.0;
            const auto [ptr, err] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (err != std::errc{} || ptr != c.data() + c.size() || !std::isfinite(v)) {
                throw ParseError("invalid number '" + c + "'", line_no);
            }
            (k == 1 ? s.quality : s.contribution) = v;
        }
        out.push_back(std::move(s));
    }
    if (!header_seen) throw ParseError("empty score file", 1);
    if (out.empty()) throw ParseError("score file has no data rows", line_no + 1);
    return out;
}

ojson evaluation_report(const std::vector<ScoreCard>& cards, const RewardPools& pools,
                        const std::vector<std::string>& warnings) {
    ojson report;
    report["scenario"] = "evaluate";
    report["pools"] = {{"r_data", pools.r_data}, {"r_model", pools.r_model}};
    report["scorecards"] = scorecards_to_json(cards);
    report["totals"] = {{"paid_data", sum_of(cards, &ScoreCard::r_quality)},
                        {"paid_model", sum_of(cards, &ScoreCard::r_contribution)}};
    report["warnings"] = warnings;
    return report;
}

std::string render_report(const nlohmann::json& report) {
    std::ostringstream out;
    out << std::fixed;
    auto table = [&](const std::string& title, const nlohmann::json& cards) {
        out << title << '\n';
        out << std::left << std::setw(16) << "participant" << std::right << std::setw(11) << "quality"
            << std::setw(13) << "contribution" << std::setw(10) << "q_norm" << std::setw(10) << "c_norm"
            << std::setw(13) << "r_quality" << std::setw(15) << "r_contribution" << '\n';
        for (const auto& c : cards) {
            out << std::left << std::setw(16) << c.at("participant").get<std::string>() << std::right
                << std::setprecision(4) << std::setw(11) << c.at("quality").get<double>() << std::setw(13)
                << c.at("contribution").get<double>() << std::setw(10) << c.at("quality_norm").get<double>()
                << std::setw(10) << c.at("contribution_norm").get<double>() << std::setprecision(2)
                << std::setw(13) << c.at("r_quality").get<double>() << std::setw(15)
                << c.at("r_contribution").get<double>() << '\n';
        }
        out << '\n';
    };
    try {
        out << "scenario: " << report.at("scenario").get<std::string>();
        if (report.contains("seed")) out << "  seed: " << report.at("seed").get<std::uint64_t>();
        out << "\n\n";
        if (report.contains("scorecards")) table("scores", report.at("scorecards"));
        if (report.contains("vfl")) {
            for (const auto& [company, cohort] : report.at("vfl").items()) {
                table("vfl cohort " + company, cohort.at("scorecards"));
            }
        }
        if (report.contains("hfl") && !report.at("hfl").at("scorecards").empty()) {
            table("hfl cohort", report.at("hfl").at("scorecards"));
        }
        const auto& totals = report.at("totals");
        out << std::setprecision(4) << "paid_data: " << totals.at("paid_data").get<double>()
            << "  paid_model: " << totals.at("paid_model").get<double>() << '\n';
        if (report.contains("checks")) {
            out << "checks: " << (report.at("checks").at("passed").get<bool>() ? "passed" : "FAILED") << '\n';
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("not a report document: ") + e.what());
    }
    return out.str();
}

}  // namespace gasfl
