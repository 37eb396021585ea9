// Thin bindings. Structured results cross the boundary as JSON text and are
// decoded on the Python side.
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "carbondse/config.hpp"
#include "carbondse/report.hpp"
#include "carbondse/rundir.hpp"

namespace py = pybind11;
using namespace carbondse;

namespace {

struct Session {
    RunConfig cfg;

    explicit Session(const std::string& path) : cfg(load_run_config(path)) {}

    void set_mode(const std::string& mode, std::optional<double> tops) {
        cfg.mode = ObjectiveMode::make(parse_mode(mode), tops.value_or(cfg.mode.tops_budget));
        refresh(cfg);
    }

    std::string evaluate(const std::string& hw) const {
        const auto ctx = make_context(cfg);
        auto c = evaluate_candidate(ModelConfig::unpruned(cfg.base), HardwareConfig::parse(hw), ctx, cfg.mode);
        return to_json(c).dump();
    }

    std::string search(const std::string& strategy, std::optional<std::uint64_t> seed,
                       std::optional<std::uint64_t> budget, std::optional<int> jobs) const {
        auto opts = cfg.search;
        if (seed) opts.seed = *seed;
        if (budget) opts.budget = *budget;
        if (jobs) opts.jobs = *jobs;
        RunRecord run;
        {
            py::gil_scoped_release release;
            run = make_strategy(strategy.empty() ? cfg.strategy : strategy)
                      ->run(make_space(cfg), cfg.mode, make_context(cfg), opts);
        }
        auto j = run_summary_json(run);
        j["front"] = nlohmann::json::array();
        for (const auto& m : run.front.members) j["front"].push_back(to_json(m));
        return j.dump();
    }

    void save(const std::string& strategy, const std::string& dir, std::optional<std::uint64_t> seed, bool force) {
        auto opts = cfg.search;
        if (seed) opts.seed = *seed;
        py::gil_scoped_release release;
        auto run = make_strategy(strategy.empty() ? cfg.strategy : strategy)
                       ->run(make_space(cfg), cfg.mode, make_context(cfg), opts);
        prepare_run_dir(dir, force);
        write_config_snapshot(dir, cfg);
        write_run(dir, run);
    }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "carbondse native core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<Session>(m, "Session")
        .def(py::init<const std::string&>(), py::arg("config_path"))
        .def("set_mode", &Session::set_mode, py::arg("mode"), py::arg("tops") = py::none())
        .def_property_readonly("mode", [](const Session& s) { return to_string(s.cfg.mode.variant); })
        .def_property_readonly("tops_budget", [](const Session& s) { return s.cfg.mode.tops_budget; })
        .def_property_readonly("region", [](const Session& s) { return s.cfg.region; })
        .def_property_readonly("base_params",
                               [](const Session& s) { return param_count(ModelConfig::unpruned(s.cfg.base)); })
        .def("evaluate_json", &Session::evaluate, py::arg("hw"))
        .def("search_json", &Session::search, py::arg("strategy") = "", py::arg("seed") = py::none(),
             py::arg("budget") = py::none(), py::arg("jobs") = py::none())
        .def("save_run", &Session::save, py::arg("strategy"), py::arg("out"), py::arg("seed") = py::none(),
             py::arg("force") = false);

    m.def("peak_tops", [](const std::string& hw) { return peak_tops(HardwareConfig::parse(hw), Platform{}); },
          py::arg("hw"));
    m.def("lifetime_inferences",
          [](double years, double hours, double rate) { return lifetime_inferences({years, hours, rate}); },
          py::arg("years"), py::arg("hours_per_day"), py::arg("per_second"));
    m.def("hypervolume",
          [](const std::vector<std::vector<double>>& pts, const std::vector<double>& ref) {
              return hypervolume(pts, ref);
          },
          py::arg("points"), py::arg("ref"));
    m.def("nondominated", &nondominated_indices, py::arg("points"));
    m.def("spearman",
          [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
          py::arg("x"), py::arg("y"));
    m.def("load_run_json", [](const std::string& dir) { return load_run(dir).summary.dump(); }, py::arg("dir"));
}
