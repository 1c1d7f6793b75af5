#include "kinktrap/cli.hpp"

#include <chrono>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "kinktrap/config.hpp"
#include "kinktrap/errors.hpp"
#include "kinktrap/io.hpp"
#include "kinktrap/modes.hpp"
#include "kinktrap/pnscan.hpp"
#include "kinktrap/quench.hpp"

namespace kinktrap {

namespace {

using json = nlohmann::ordered_json;

class RunContext {
  public:
    RunContext(const RunRequest& request, const RunConfig& config)
        : request_(request), config_(config), bundle_(build_model(config)) {
        std::filesystem::create_directories(request.output_dir);
    }

    const RunConfig& config() const { return config_; }
    const ModelBundle& model() const { return bundle_; }

    void emit(const std::string& name, const std::string& content) {
        const auto path = request_.output_dir / name;
        write_text_file(path, content);
        outputs_.push_back({name, sha256_hex(content), content.size()});
    }

    void finish(double wall_seconds) {
        json manifest;
        manifest["command"] = request_.command;
        manifest["artifact_version"] = kArtifactVersion;
        manifest["format_version"] = kFormatVersion;
        manifest["seed"] = config_.seed;
        manifest["workers"] = config_.workers;
        json cfg;
        for (const auto& [key, value] : config_.to_map()) cfg[key] = value;
        manifest["config"] = cfg;
        json files = json::array();
        for (const auto& out : outputs_) {
            json f;
            f["path"] = out.name;
            f["sha256"] = out.digest;
            f["bytes"] = out.bytes;
            files.push_back(f);
        }
        manifest["outputs"] = files;
        manifest["timing_seconds"] = wall_seconds;
        write_text_file(request_.output_dir / "manifest.json", manifest.dump(2) + "\n");
    }

  private:
    struct Output {
        std::string name;
        std::string digest;
        std::size_t bytes;
    };
    RunRequest request_;
    RunConfig config_;
    ModelBundle bundle_;
    std::vector<Output> outputs_;
};

json kink_json(const KinkDescriptor& kink, const UnitScale& scale) {
    json j;
    j["present"] = kink.present;
    j["topological_charge"] = kink.topological_charge;
    j["axial_position_um"] = kink.axial_position * scale.length * 1e6;
    j["lattice_position"] = kink.lattice_position;
    j["core_out_of_plane_um"] = kink.core_out_of_plane_amplitude * scale.length * 1e6;
    j["core_ions"] = {kink.core_ion_indices[0], kink.core_ion_indices[1]};
    j["multiplicity"] = kink.multiplicity;
    return j;
}

// positions CSV in SI with the alternation signature column
std::string positions_csv(const EquilibriumConfig& eq, const UnitScale& scale, double y_floor) {
    CsvWriter csv({"ion_index", "x_m", "y_m", "z_m", "s_i"});
    const auto order = axial_order(eq.positions);
    std::vector<int> signature(eq.positions.size(), 0);
    for (int k = 0; k < static_cast<int>(order.size()); ++k) {
        const double y = eq.positions[order[k]].y();
        if (std::abs(y) >= y_floor)
            signature[order[k]] = (y * ((k % 2 == 0) ? 1.0 : -1.0) > 0.0) ? 1 : -1;
    }
    for (int i = 0; i < static_cast<int>(eq.positions.size()); ++i) {
        const auto& r = eq.positions[i];
        csv.row({cell(i), cell(r.x() * scale.length), cell(r.y() * scale.length),
                 cell(r.z() * scale.length), cell(signature[i])});
    }
    return csv.str();
}

EquilibriumConfig configured_equilibrium(const RunContext& ctx) {
    const auto& m = ctx.model();
    return ctx.config().kink ? kink_equilibrium(ctx.config().n_ions, m.trap_secular, m.thresholds)
                             : census_ground_state(ctx.config().n_ions, m.trap_secular);
}

void cmd_relax(RunContext& ctx) {
    const auto& m = ctx.model();
    const EquilibriumConfig eq = configured_equilibrium(ctx);
    const StructureInfo info = classify(eq, m.thresholds.linear, m.thresholds.plane);

    ctx.emit("positions.csv", positions_csv(eq, m.scale, m.thresholds.linear));

    json summary;
    summary["n_ions"] = ctx.config().n_ions;
    summary["structure"] = to_string(info.cls);
    summary["potential_energy_scaled"] = eq.potential_energy;
    summary["potential_energy_joule"] = eq.potential_energy * m.scale.energy;
    summary["gradient_norm"] = eq.gradient_norm;
    summary["max_out_of_plane_um"] = info.max_out_of_plane * m.scale.length * 1e6;
    summary["transverse_amplitude_um"] = info.transverse_amplitude * m.scale.length * 1e6;
    summary["flip_count"] = info.flip_count;
    if (info.flip_count <= 1) {
        try {
            summary["kink"] = kink_json(detect_kink(eq, m.thresholds), m.scale);
        } catch (const AmbiguousStructure&) {
        }
    }
    ctx.emit("summary.json", summary.dump(2) + "\n");
    std::printf("relax: N=%d %s E=%s\n", ctx.config().n_ions, to_string(info.cls),
                format_double(eq.potential_energy).c_str());
}

void cmd_modes(RunContext& ctx) {
    const auto& m = ctx.model();
    const EquilibriumConfig eq = configured_equilibrium(ctx);
    const ModeSpectrum spectrum = normal_modes(eq);
    const ModeLocalization loc = localization(spectrum);

    CsvWriter csv({"mode_index", "frequency_hz", "ipr", "ion_1", "ion_2", "ion_3"});
    const double omega_x_hz = ctx.config().axial_hz;
    for (int mode = 0; mode < spectrum.n_modes(); ++mode) {
        const auto& top = loc.dominant[mode];
        csv.row({cell(mode), cell(spectrum.frequencies(mode) * omega_x_hz), cell(loc.ipr[mode]),
                 cell(top.size() > 0 ? top[0] : -1), cell(top.size() > 1 ? top[1] : -1),
                 cell(top.size() > 2 ? top[2] : -1)});
    }
    ctx.emit("spectrum.csv", csv.str());

    json summary;
    summary["n_ions"] = ctx.config().n_ions;
    summary["kink"] = ctx.config().kink;
    summary["lowest_frequency_over_omega_x"] = spectrum.frequencies(0);
    summary["lowest_mode_ipr"] = loc.ipr[0];
    summary["lowest_mode_ions"] = loc.dominant[0];
    ctx.emit("summary.json", summary.dump(2) + "\n");
    std::printf("modes: N=%d lowest %s omega_x\n", ctx.config().n_ions,
                format_double(spectrum.frequencies(0)).c_str());
}

void cmd_tune(RunContext& ctx) {
    const auto& m = ctx.model();
    const auto& c = ctx.config();
    std::vector<double> grid(c.ratio_steps);
    for (int i = 0; i < c.ratio_steps; ++i)
        grid[i] = c.ratio_min + (c.ratio_max - c.ratio_min) * i / std::max(1, c.ratio_steps - 1);

    const auto table = tune_scan(c.n_ions, m.trap_secular, grid, m.thresholds);
    CsvWriter csv({"ratio", "omega_low_hz", "ipr", "kink_lost"});
    double lo = 1e300, hi = 0.0;
    for (const auto& p : table) {
        csv.row({cell(p.ratio), cell(p.kink_lost ? 0.0 : p.omega_low * c.axial_hz), cell(p.ipr),
                 cell(static_cast<int>(p.kink_lost))});
        if (!p.kink_lost) {
            lo = std::min(lo, p.omega_low);
            hi = std::max(hi, p.omega_low);
        }
    }
    ctx.emit("tune.csv", csv.str());
    json summary;
    summary["n_ions"] = c.n_ions;
    summary["omega_low_min_over_omega_x"] = lo;
    summary["omega_low_max_over_omega_x"] = hi;
    ctx.emit("summary.json", summary.dump(2) + "\n");
    std::printf("tune: N=%d omega_low in [%s, %s] omega_x\n", c.n_ions, format_double(lo).c_str(),
                format_double(hi).c_str());
}

void cmd_pn(RunContext& ctx) {
    const auto& m = ctx.model();
    const auto& c = ctx.config();
    DescentOptions opts;
    opts.gamma = c.descent_gamma;
    opts.dt = c.dt;

    const SeededKink right = seed_offcenter_kink(c.n_ions, m.trap_secular, c.bond_offset,
                                                 m.thresholds, opts);
    const KinkPath path_right =
        adiabatic_descent(right.positions, m.trap_secular, opts.gamma, m.thresholds, opts);
    const SeededKink left = seed_offcenter_kink(c.n_ions, m.trap_secular, -c.bond_offset,
                                                m.thresholds, opts);
    const KinkPath path_left =
        adiabatic_descent(left.positions, m.trap_secular, opts.gamma, m.thresholds, opts);
    const PNProfile profile = pn_profile(path_left, path_right);

    const double kbtd = m.scale.kb_td();
    CsvWriter csv({"kink_position_um", "energy_over_kB_TD"});
    for (std::size_t i = 0; i < profile.position.size(); ++i)
        csv.row({cell(profile.position[i] * m.scale.length * 1e6),
                 cell(profile.energy[i] / kbtd)});
    ctx.emit("profile.csv", csv.str());

    json summary;
    summary["n_ions"] = c.n_ions;
    summary["bond_offset"] = c.bond_offset;
    summary["gamma"] = opts.gamma;
    summary["barrier_over_kB_TD"] = profile.barrier_height / kbtd;
    summary["barrier_joule"] = profile.barrier_height * m.scale.energy;
    ctx.emit("summary.json", summary.dump(2) + "\n");
    std::printf("pn: N=%d barrier %s kB*T_D\n", c.n_ions,
                format_double(profile.barrier_height / kbtd).c_str());
}

void cmd_sweep(RunContext& ctx) {
    const auto& m = ctx.model();
    const auto& c = ctx.config();
    std::vector<int> n_values;
    for (int n = c.sweep_n_min; n <= c.sweep_n_max; ++n) n_values.push_back(n);
    DescentOptions opts;
    opts.gamma = c.descent_gamma;
    opts.dt = c.dt;
    const SweepResult result = barrier_sweep(n_values, m.trap_secular, m.thresholds, opts,
                                             c.workers);

    const double kbtd = m.scale.kb_td();
    CsvWriter csv({"N", "barrier_over_kB_TD"});
    for (const auto& row : result.rows)
        if (row.ok) csv.row({cell(row.n_ions), cell(row.barrier / kbtd)});
    ctx.emit("sweep.csv", csv.str());

    json fit;
    if (result.fit) {
        // refit in kB*T_D units for the exported coefficients
        std::vector<double> xs, ys;
        for (const auto& row : result.rows)
            if (row.ok) {
                xs.push_back(row.n_ions);
                ys.push_back(row.barrier / kbtd);
            }
        const QuadraticFit f = fit_quadratic(xs, ys);
        fit["a"] = f.a;
        fit["b"] = f.b;
        fit["c"] = f.c;
        fit["r_squared"] = f.r_squared;
    } else {
        fit["declined"] = "underdetermined";
    }
    fit["excluded_N"] = result.excluded;
    ctx.emit("fit.json", fit.dump(2) + "\n");
    std::printf("sweep: %zu/%zu points, R^2 %s\n",
                result.rows.size() - result.excluded.size(), result.rows.size(),
                result.fit ? format_double(fit["r_squared"].get<double>()).c_str() : "n/a");
}

void cmd_quench(RunContext& ctx) {
    const auto& m = ctx.model();
    const auto& c = ctx.config();
    QuenchSchedule schedule = c.quench;
    schedule.kb_td = m.scale.kb_td();
    schedule.dt = c.dt;
    const DopplerScattering cooling{m.laser, c.recoil};

    std::vector<TrialOutcome> outcomes;
    const OccurrenceTable table = kink_statistics(c.n_list, c.trials, c.seed, m.trap_secular,
                                                  cooling, schedule, m.thresholds, c.workers,
                                                  &outcomes);

    CsvWriter csv({"N", "trials", "p_zigzag", "p_one_kink", "p_multi", "p_failed",
                   "sigma_one_kink"});
    for (const auto& row : table.rows)
        csv.row({cell(row.n_ions), cell(row.trials), cell(row.p_zigzag), cell(row.p_one_kink),
                 cell(row.p_multi), cell(row.p_failed), cell(row.sigma_one_kink)});
    ctx.emit("occurrence.csv", csv.str());

    std::string log;
    for (const auto& o : outcomes) {
        json line;
        line["n_ions"] = o.n_ions;
        line["seed"] = o.seed;
        line["crystallized"] = o.crystallized;
        if (!o.crystallized) line["failure"] = o.failure;
        line["structure"] = to_string(o.structure);
        line["multiplicity"] = o.multiplicity;
        json flips = json::array();
        for (const auto& f : o.flips) {
            json fj;
            fj["axial_position_um"] = f.axial_position * m.scale.length * 1e6;
            fj["lattice_position"] = f.lattice_position;
            fj["core_ions"] = {f.core_ion_indices[0], f.core_ion_indices[1]};
            flips.push_back(fj);
        }
        line["kinks"] = flips;
        line["remelts"] = o.remelts;
        line["max_transient_multiplicity"] = o.max_transient_multiplicity;
        json history = json::array();
        for (const auto& ev : o.multiplicity_history)
            history.push_back({ev.time, ev.multiplicity});
        line["multiplicity_history"] = history;
        line["final_temperature_td"] = o.final_temperature;
        line["simulated_time"] = o.simulated_time;
        log += line.dump() + "\n";
    }
    ctx.emit("trials.jsonl", log);

    json summary;
    for (const auto& row : table.rows) {
        json r;
        r["trials"] = row.trials;
        r["p_one_kink"] = row.p_one_kink;
        r["p_failed"] = row.p_failed;
        summary[std::to_string(row.n_ions)] = r;
    }
    ctx.emit("summary.json", summary.dump(2) + "\n");
    for (const auto& row : table.rows)
        std::printf("quench: N=%d p1=%s +- %s (failed %s)\n", row.n_ions,
                    format_double(row.p_one_kink).c_str(),
                    format_double(row.sigma_one_kink).c_str(),
                    format_double(row.p_failed).c_str());
}

void cmd_render(RunContext& ctx) {
    const auto& m = ctx.model();
    const auto& c = ctx.config();

    const EquilibriumConfig eq = configured_equilibrium(ctx);
    const ModeSpectrum spectrum = normal_modes(eq);
    Rng rng(c.seed);
    const double kT = c.render_temperature_td * m.scale.kb_td();
    const SystemState initial = thermal_sample(spectrum, kT, rng);

    const double duration =
        c.render_duration > 0.0 ? c.render_duration : c.camera.exposure / m.scale.time;
    CameraConfig camera = c.camera;
    camera.exposure = duration * m.scale.time;  // render exactly what was integrated
    const double dt = (m.trap.model == TrapModel::FullRF)
                          ? m.trap.rf_period() / c.rf_steps_per_period
                          : c.dt;
    const Trajectory traj = simulate(initial, m.trap, std::monostate{}, duration, dt,
                                     c.stride, derive_seed(c.seed, 1));

    const ImageFrame frame = render_frame(traj, camera, m.scale, &m.laser);
    {
        double peak = 0.0;
        for (double p : frame.intensity) peak = std::max(peak, p);
        const double scale16 = (peak > 0.0) ? 65535.0 / peak : 1.0;
        std::string pgm = "P5\n" + std::to_string(frame.width) + " " +
                          std::to_string(frame.height) + "\n65535\n";
        for (double p : frame.intensity) {
            const auto v = static_cast<std::uint16_t>(std::lround(std::max(0.0, p) * scale16));
            pgm += static_cast<char>(v >> 8);
            pgm += static_cast<char>(v & 0xff);
        }
        ctx.emit("frame.pgm", pgm);

        json meta;
        meta["width"] = frame.width;
        meta["height"] = frame.height;
        meta["pixel_size_um"] = camera.pixel_size * 1e6;
        meta["psf_sigma_um"] = camera.psf_sigma * 1e6;
        meta["exposure_ms"] = camera.exposure * 1e3;
        meta["origin_u_um"] = frame.origin_u * 1e6;
        meta["origin_v_um"] = frame.origin_v * 1e6;
        meta["intensity_scale"] = scale16;
        meta["n_snapshots"] = frame.n_snapshots;
        meta["total_weight"] = frame.total_weight;
        meta["temperature_td"] = c.render_temperature_td;
        ctx.emit("frame.json", meta.dump(2) + "\n");
    }

    // per-ion radial spreads against the projected equilibrium positions
    std::vector<Eigen::Vector2d> reference;
    reference.reserve(eq.positions.size());
    for (const auto& r : eq.positions) reference.push_back(project_position(r, camera, m.scale));
    const std::vector<double> spreads = blur_metric(frame, reference);
    CsvWriter blur({"ion_index", "x_um", "radial_spread_um"});
    for (std::size_t i = 0; i < spreads.size(); ++i)
        blur.row({cell(static_cast<int>(i)), cell(reference[i].x() * 1e6),
                  cell(spreads[i] * 1e6)});
    ctx.emit("blur.csv", blur.str());
    std::printf("render: %dx%d frame, %d snapshots\n", frame.width, frame.height,
                frame.n_snapshots);
}

}  // namespace

int run(const RunRequest& request) {
    const auto start = std::chrono::steady_clock::now();
    try {
        static const std::set<std::string> commands{"relax", "modes", "quench", "pn",
                                                    "sweep", "render", "tune"};
        if (commands.find(request.command) == commands.end())
            throw ConfigError("unknown command '" + request.command + "'");

        const RunConfig config = load_config(request.config_path, request.overrides);
        RunContext ctx(request, config);

        if (request.command == "relax") cmd_relax(ctx);
        else if (request.command == "modes") cmd_modes(ctx);
        else if (request.command == "tune") cmd_tune(ctx);
        else if (request.command == "pn") cmd_pn(ctx);
        else if (request.command == "sweep") cmd_sweep(ctx);
        else if (request.command == "quench") cmd_quench(ctx);
        else if (request.command == "render") cmd_render(ctx);

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        ctx.finish(wall);
        return kExitOk;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIoError;
    } catch (const PhysicsError& e) {
        std::fprintf(stderr, "physics error: %s\n", e.what());
        return kExitPhysicsError;
    }
}

}  // namespace kinktrap
