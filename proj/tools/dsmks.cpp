// Command-line front end: run, check, sweep, presets.

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dsmks/error.hpp"
#include "dsmks/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsmks;

namespace {

constexpr int kUsageError = 1;

struct Source {
    std::string preset;
    std::string config;
    std::vector<std::string> sets;
    std::optional<double> t_end;

    void add_to(CLI::App& app) {
        auto* p = app.add_option("--preset", preset, "Built-in scenario name");
        auto* c = app.add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
        p->excludes(c);
        app.add_option("--set", sets, "Override a numeric key, e.g. --set model.tau=0.5");
        app.add_option("--T-end", t_end, "Override the final time");
    }

    json base_json() const {
        if (preset.empty() == config.empty()) throw InvalidArgument("give exactly one of --preset or --config");
        const RunConfig cfg = preset.empty() ? load_config(config) : find_preset(preset).config;
        json j = config_to_json(cfg);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got \"" + s + "\"");
            set_config_value(j, s.substr(0, eq), std::stod(s.substr(eq + 1)));
        }
        if (t_end) j["T_end"] = *t_end;
        return j;
    }
};

std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

int cmd_presets(bool as_json, const std::string& show) {
    if (!show.empty()) {
        std::cout << config_to_json(find_preset(show).config).dump(2) << "\n";
        return 0;
    }
    if (as_json) {
        json out = json::array();
        for (const auto& p : builtin_presets()) {
            out.push_back({{"name", p.name},
                           {"description", p.description},
                           {"expected", p.expected ? to_string(*p.expected) : "none"},
                           {"config", config_to_json(p.config)}});
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    for (const auto& p : builtin_presets()) {
        std::cout << pad(p.name, 18) << pad(p.expected ? to_string(*p.expected) : "-", 10) << p.description << "\n";
    }
    return 0;
}

int cmd_run(const Source& src, const std::string& out, bool quiet) {
    const RunConfig cfg = config_from_json(src.base_json());
    Simulator sim(cfg);
    RunWriter writer(out, sim);
    RunCallbacks cb = writer.callbacks();
    cb.on_warning = [](const std::string& w) { std::cerr << "warning: " << w << "\n"; };
    if (!quiet) {
        const double every = std::max(cfg.T_end / 20.0, cfg.sample_every);
        auto next = std::make_shared<double>(0.0);
        cb.on_sample = [every, next](const SimState& s, const DiagnosticsRecord& r) {
            if (r.t + 1e-12 < *next) return;
            *next = r.t + every;
            std::fprintf(stderr, "t=%-10.4g steps=%-9ld mass=%-12.6g |u|=%-12.6g |v|=%-12.6g margin=%.4g\n", r.t,
                         s.step_count, r.mass, r.linf_u, r.linf_v, r.cmp_margin);
        };
    }
    const RunResult result = sim.run(cb);
    writer.finish(result);
    std::cout << "status: " << to_string(result.status) << "\n";
    if (!result.message.empty()) std::cout << "message: " << result.message << "\n";
    std::cout << "steps: " << result.steps << ", samples: " << result.series.size() << ", output: " << out << "\n";
    return exit_code(result.status);
}

// Recomputes one diagnostic from stored snapshots.
int cmd_check(const std::string& dir, const std::string& which, double tol) {
    const json meta = json::parse(std::ifstream(fs::path(dir) / "run.json"));
    const RunConfig cfg = config_from_json(meta.at("config"));
    const Grid grid = cfg.grid.build();
    const ScreenedSolver solver(grid, cfg.solver);
    const double C = meta.at("C_cmp").get<double>();
    const double tau = cfg.model.tau;
    const double chi = cfg.model.chi();
    const SeriesTable series = read_series(fs::path(dir) / "series.csv");
    const auto times = series.column("t");

    const std::map<std::string, std::string> stored = {{"comparison", "cmp_margin"}, {"mass", "mass"},
                                                       {"llogl", "llogl"},           {"entropy", "entropy_E"},
                                                       {"linf_u", "linf_u"},         {"linf_v", "linf_v"}};
    const std::vector<std::string> all = {"comparison", "mass", "llogl", "entropy", "linf_u", "linf_v", "steady",
                                          "monotone"};
    std::vector<std::string> names;
    if (which == "all") {
        names = all;
    } else {
        if (std::find(all.begin(), all.end(), which) == all.end()) {
            throw InvalidArgument("unknown diagnostic \"" + which + "\"");
        }
        names = {which};
    }

    DiagnosticContext ctx;
    ctx.solver = &solver;
    ctx.model = cfg.model;

    std::cout << "diagnostic,t,recomputed,stored,abs_diff\n";
    double worst = 0.0;
    for (const auto& snap : meta.at("snapshots")) {
        const Snapshot su = read_snapshot(fs::path(dir) / snap.at("u").get<std::string>());
        const Snapshot sv = read_snapshot(fs::path(dir) / snap.at("v").get<std::string>());
        const Snapshot sh = read_snapshot(fs::path(dir) / snap.at("h").get<std::string>());
        for (const Snapshot* s : {&su, &sv, &sh}) {
            if (!(s->grid == grid)) throw InvalidArgument("snapshot grid does not match the run configuration");
        }
        SimState st;
        st.t = su.t;
        st.u = su.field;
        st.v = sv.field;
        st.h = sh.field;
        st.C_cmp = C;
        st.w = solver.helmholtz(st.u);
        st.w_current = true;
        const auto row = std::find(times.begin(), times.end(), st.t);
        for (const auto& name : names) {
            double value = 0.0;
            if (name == "comparison") value = comparison_margin(st, tau);
            else if (name == "mass") value = integrate(st.u);
            else if (name == "llogl") value = llogl(st.u);
            else if (name == "entropy") value = entropy_E(st.u, st.v, chi);
            else if (name == "linf_u") value = norm(st.u, Norm::Linf);
            else if (name == "linf_v") value = norm(st.v, Norm::Linf);
            else if (name == "steady") value = steady_state_residual(st.u, st.v, chi, integrate(st.u));
            else if (name == "monotone") value = monotone_gap(st, ctx);
            std::string stored_s = "";
            std::string diff_s = "";
            const auto it = stored.find(name);
            if (it != stored.end() && row != times.end()) {
                const double ref = series.column(it->second)[static_cast<std::size_t>(row - times.begin())];
                const double diff = std::abs(value - ref);
                worst = std::max(worst, diff);
                stored_s = format_double(ref);
                diff_s = format_double(diff);
            }
            std::cout << name << "," << format_double(st.t) << "," << format_double(value) << "," << stored_s << ","
                      << diff_s << "\n";
        }
    }
    std::cerr << "max abs difference against series.csv: " << worst << " (tolerance " << tol << ")\n";
    return worst <= tol ? 0 : kUsageError;
}

struct SweepAxis {
    std::string key;
    std::vector<double> values;
};

SweepAxis parse_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--param expects key=start:stop:step or key=a,b,c");
    SweepAxis axis{spec.substr(0, eq), {}};
    const std::string rhs = spec.substr(eq + 1);
    if (rhs.find(':') != std::string::npos) {
        double a = 0, b = 0, s = 0;
        if (std::sscanf(rhs.c_str(), "%lf:%lf:%lf", &a, &b, &s) != 3 || !(s > 0.0) || b < a) {
            throw InvalidArgument("bad range \"" + rhs + "\"");
        }
        const long count = std::lround(std::floor((b - a) / s + 1e-9)) + 1;
        for (long k = 0; k < count; ++k) axis.values.push_back(a + static_cast<double>(k) * s);
    } else {
        std::stringstream ss(rhs);
        std::string item;
        while (std::getline(ss, item, ',')) axis.values.push_back(std::stod(item));
    }
    if (axis.values.empty()) throw InvalidArgument("empty parameter list for " + axis.key);
    return axis;
}

int cmd_sweep(const Source& src, const std::vector<std::string>& params, const std::string& out, int jobs) {
    const json base = src.base_json();
    std::vector<SweepAxis> axes;
    for (const auto& p : params) axes.push_back(parse_axis(p));

    struct Job {
        std::vector<double> values;
        json config;
        fs::path dir;
        std::string status = "not run";
        std::string v_class = "-";
        double final_linf_v = 0.0;
        int code = 0;
    };
    std::vector<Job> work(1);
    for (const auto& axis : axes) {
        std::vector<Job> next;
        for (const auto& job : work) {
            for (double v : axis.values) {
                Job j = job;
                j.values.push_back(v);
                next.push_back(std::move(j));
            }
        }
        work = std::move(next);
    }
    for (std::size_t i = 0; i < work.size(); ++i) {
        work[i].config = base;
        std::string tag = "run_" + std::to_string(i);
        for (std::size_t a = 0; a < axes.size(); ++a) {
            set_config_value(work[i].config, axes[a].key, work[i].values[a]);
            tag += "_" + axes[a].key + "=" + format_double(work[i].values[a]);
        }
        std::replace(tag.begin(), tag.end(), '/', '_');
        work[i].dir = fs::path(out) / tag;
        config_from_json(work[i].config);
    }

    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const int workers = std::max(1, std::min<int>(jobs > 0 ? jobs : hw, static_cast<int>(work.size())));
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        omp_set_num_threads(std::max(1, hw / workers));
        for (std::size_t i = next++; i < work.size(); i = next++) {
            Job& job = work[i];
            try {
                const RunResult r = run_to_directory(config_from_json(job.config), job.dir);
                job.status = to_string(r.status);
                job.code = exit_code(r.status);
                if (!r.series.empty()) job.final_linf_v = r.series.back().linf_v;
                if (r.series.size() >= 20) {
                    std::vector<double> t, v;
                    for (const auto& rec : r.series) {
                        t.push_back(rec.t);
                        v.push_back(rec.linf_v);
                    }
                    const DiagnosticParams d = config_from_json(job.config).diagnostics;
                    job.v_class = to_string(blowup_classify(t, v, d.window_frac, d.growth_factor));
                }
            } catch (const std::exception& e) {
                job.status = std::string("error: ") + e.what();
                job.code = kUsageError;
            }
            std::lock_guard lock(io);
            std::cerr << "finished " << job.dir.string() << ": " << job.status << "\n";
        }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::string table;
    for (const auto& a : axes) table += a.key + ",";
    table += "status,linf_v_class,final_linf_v,dir\n";
    for (const auto& job : work) {
        for (double v : job.values) table += format_double(v) + ",";
        table += job.status + "," + job.v_class + "," + format_double(job.final_linf_v) + "," + job.dir.string() + "\n";
    }
    std::cout << table;
    std::ofstream(fs::path(out) / "summary.csv") << table;
    int worst = 0;
    for (const auto& job : work) worst = std::max(worst, job.code);
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Density-suppressed motility chemotaxis simulator"};
    app.require_subcommand(1);

    auto* presets = app.add_subcommand("presets", "List built-in scenarios");
    bool presets_json = false;
    std::string show;
    presets->add_flag("--json", presets_json, "Print presets with full configurations as JSON");
    presets->add_option("--show", show, "Print the configuration of one preset");

    auto* run = app.add_subcommand("run", "Run one configuration");
    Source run_src;
    run_src.add_to(*run);
    std::string run_out = "results";
    bool quiet = false;
    run->add_option("--out", run_out, "Output directory");
    run->add_flag("-q,--quiet", quiet, "No progress output");

    auto* check = app.add_subcommand("check", "Recompute diagnostics from stored snapshots");
    std::string snap_dir;
    std::string which = "comparison";
    double tol = 1e-12;
    check->add_option("--snapshots", snap_dir, "Run output directory")->required();
    check->add_option("--diagnostic", which,
                      "comparison | mass | llogl | entropy | linf_u | linf_v | steady | monotone | all");
    check->add_option("--tol", tol, "Largest accepted difference against series.csv");

    auto* sweep = app.add_subcommand("sweep", "Run a cartesian parameter grid concurrently");
    Source sweep_src;
    sweep_src.add_to(*sweep);
    std::vector<std::string> params;
    std::string sweep_out = "sweep";
    int jobs = 0;
    sweep->add_option("--param", params, "key=start:stop:step or key=a,b,c ('mass' means the critical-mass ratio)")
        ->required();
    sweep->add_option("--out", sweep_out, "Output directory");
    sweep->add_option("-j,--jobs", jobs, "Concurrent runs (default: hardware threads)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kUsageError;
    }

    try {
        if (*presets) return cmd_presets(presets_json, show);
        if (*run) return cmd_run(run_src, run_out, quiet);
        if (*check) return cmd_check(snap_dir, which, tol);
        if (*sweep) return cmd_sweep(sweep_src, params, sweep_out, jobs);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    }
    return kUsageError;
}
