#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gasfl/error.hpp"
#include "gasfl/forecaster.hpp"
#include "gasfl/incentive.hpp"
#include "gasfl/scenario.hpp"

namespace py = pybind11;
using namespace gasfl;

namespace {

// Scorecards cross the boundary as plain dicts; optional fields map to None.
py::dict card_dict(const ScoreCard& c) {
    py::dict d;
    d["participant"] = c.participant;
    d["corr_score"] = c.corr_score;
    d["quant_score"] = c.quant_score;
    d["quality"] = c.quality;
    d["smape_new_local"] = c.smape_new_local;
    d["smape_new_global"] = c.smape_new_global;
    d["acc_local"] = c.acc_local;
    d["acc_global"] = c.acc_global;
    d["increment"] = c.increment;
    d["contribution"] = c.contribution;
    d["quality_norm"] = c.quality_norm;
    d["contribution_norm"] = c.contribution_norm;
    d["r_quality"] = c.r_quality;
    d["r_contribution"] = c.r_contribution;
    return d;
}

ScenarioConfig config_from(const py::object& source, std::optional<std::uint64_t> seed) {
    ScenarioConfig config = py::isinstance<py::dict>(source)
                                ? ScenarioConfig::from_json(nlohmann::json::parse(
                                      py::module_::import("json").attr("dumps")(source).cast<std::string>()))
                                : load_scenario(source.cast<std::filesystem::path>());
    if (seed) config.seed = *seed;
    return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Federated energy forecasting with data-quality and contribution rewards.";

    auto error = py::register_exception<Error>(m, "GasflError");
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
    py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
    py::register_exception<IoError>(m, "IoError", error.ptr());

    m.def("smape", &smape, py::arg("forecast"), py::arg("actual"));
    m.def("smape_new", &smape_new, py::arg("forecast"), py::arg("actual"));
    m.def(
        "corr_score", [](const Matrix& x, const Vector& y) { return corr_score(x, y); }, py::arg("features"),
        py::arg("target"), "Mean absolute Pearson correlation over columns; signed for a single column.");
    m.def("quant_score", &quant_score, py::arg("samples"), py::arg("total_samples"));
    m.def("contribution", &contribution, py::arg("increments"), py::arg("participant"));
    m.def(
        "normalize",
        [](const std::map<std::string, double>& values) {
            Diagnostics diag;
            auto out = normalize(values, &diag);
            return py::make_tuple(out, diag.warnings);
        },
        py::arg("values"), "Returns (shares, warnings).");
    m.def(
        "allocate",
        [](const std::vector<std::tuple<std::string, double, double>>& scores, double r_data, double r_model) {
            std::vector<ExternalScore> rows;
            for (const auto& [id, q, c] : scores) rows.push_back({id, q, c});
            py::list cards;
            for (const auto& card : allocate_from_scores(rows, {r_data, r_model})) cards.append(card_dict(card));
            return cards;
        },
        py::arg("scores"), py::arg("r_data") = 100.0, py::arg("r_model") = 100.0,
        "Normalizes (id, quality, contribution) rows and splits both pools.");

    m.def(
        "train_linear",
        [](const Matrix& x, const Vector& y, double learning_rate, int epochs, double l2, bool standardize) {
            if (x.rows() != y.size()) throw ShapeError("features and target row counts differ");
            std::vector<Date> dates;
            std::vector<std::string> names;
            for (Eigen::Index i = 0; i < x.rows(); ++i) dates.push_back(Date{std::chrono::days{i}});
            for (Eigen::Index j = 0; j < x.cols(); ++j) names.push_back("x" + std::to_string(j));
            TrainConfig config;
            config.learning_rate = learning_rate;
            config.epochs = epochs;
            config.l2 = l2;
            config.standardize = standardize;
            const auto params = train(TimeSeriesDataset(std::move(dates), x, std::move(names), y), config);
            return py::make_tuple(Vector(params.weights), params.bias);
        },
        py::arg("features"), py::arg("target"), py::arg("learning_rate") = 0.1, py::arg("epochs") = 200,
        py::arg("l2") = 0.0, py::arg("standardize") = true, "Returns (weights, bias) in raw feature units.");

    m.def(
        "simulate_json",
        [](const py::object& source, std::optional<std::uint64_t> seed, bool full_transcript) {
            const auto config = config_from(source, seed);
            py::gil_scoped_release release;
            return simulate(config, full_transcript).report.dump();
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("full_transcript") = false);
    m.def(
        "gen_data",
        [](const py::object& source, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed) {
            return gen_data(config_from(source, seed), out_dir).files;
        },
        py::arg("config"), py::arg("out_dir"), py::arg("seed") = py::none());
    m.def(
        "render_report", [](const std::string& report) { return render_report(nlohmann::json::parse(report)); },
        py::arg("report_json"));
}
