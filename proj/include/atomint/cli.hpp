#pragma once

// Command-line front end. Every subcommand reads a scenario, writes its CSV or
// JSON artifacts into --out and a <subcommand>.manifest.json next to them.
// Exit codes: 0 ok, 1 validation error, 2 runtime error.

#include <atomint/bragg.hpp>
#include <atomint/diffraction_scan.hpp>
#include <atomint/interferometer.hpp>
#include <atomint/io.hpp>
#include <atomint/magnetic.hpp>
#include <atomint/scenario.hpp>
#include <atomint/signal.hpp>
#include <atomint/slit_model.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace atomint::cli {

namespace fs = std::filesystem;

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::vector<std::string> overrides;
  // fit
  std::string input;
  std::string kind = "fringes";
  std::string background;
  std::optional<double> background_rate;
  int degree = 2;
};

class Run {
 public:
  Run(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {}

  Scenario load() {
    constants_ = load_constant_table();
    json root = json::object();
    if (!opt_.scenario.empty()) root = read_json_file(opt_.scenario);
    for (const auto& o : opt_.overrides) apply_override(root, o);
    if (opt_.seed) root["seed"] = *opt_.seed;
    inputs_ = command_ + "\n" + root.dump() + "\n" + constants_.table.dump() + "\n";
    auto sc = parse_scenario(root, constants_);
    seed_ = sc.seed;
    warnings_ = sc.diagnostics.warnings;
    return sc;
  }

  void add_input(const std::string& label, const std::string& content) { inputs_ += label + "\n" + content + "\n"; }
  void warn(const std::string& w) { warnings_.push_back(w); }

  void write(const std::string& name, const std::string& content) {
    write_text(fs::path(opt_.out) / name, content);
    outputs_.push_back(name);
  }

  void write_trace_files(const std::string& name, const CountTrace& t) {
    write(name + ".csv", trace_csv(t));
    write(name + ".json", dump(trace_sidecar(t)));
  }

  void finish() {
    json m;
    m["tool"] = "atomint";
    m["version"] = version;
    m["subcommand"] = command_;
    m["scenario"] = opt_.scenario;
    m["seed"] = seed_;
    m["inputs_hash"] = "fnv1a64:" + hex64(fnv1a(inputs_));
    m["constants_source"] = constants_.source;
    m["outputs"] = outputs_;
    m["warnings"] = warnings_;
    write_text(fs::path(opt_.out) / (command_ + ".manifest.json"), dump(m));
  }

  [[nodiscard]] const ConstantTable& constants() const { return constants_; }

 private:
  std::string command_;
  const Options& opt_;
  ConstantTable constants_;
  std::string inputs_;
  std::uint64_t seed_ = 0;
  std::vector<std::string> outputs_;
  std::vector<std::string> warnings_;
};

inline std::vector<double> grid(double lo, double hi, int n) { return linear_sweep(lo, hi, n); }

// Visibility of port B1 for the configured gratings at the mean velocity,
// from four samples a quarter fringe apart.
inline double model_visibility(const Scenario& sc) {
  const int p = sc.gratings[1].order;
  const double quarter = 0.5 * pi / (p * sc.geometry.k_G());
  std::array<double, 4> b{};
  for (int k = 0; k < 4; ++k) {
    auto g = sc.gratings;
    g[2].x_position += k * quarter;
    b[static_cast<std::size_t>(k)] = fringe_signal(g, sc.geometry).b1;
  }
  const double mean = 0.25 * (b[0] + b[1] + b[2] + b[3]);
  if (!(mean > 0.0)) return 0.0;
  return 0.5 * std::hypot(b[0] - b[2], b[1] - b[3]) / mean;
}

// x3 -> phase, with the piezo nonlinearity as a relative quadratic term.
inline PhaseLaw piezo_phase(const Scenario& sc) {
  const double k = sc.gratings[1].order * sc.geometry.k_G();
  return PhaseLaw{{0.0, -k, -k * sc.fringes.piezo_quadratic}};
}

inline FringeModel fringe_model(const Scenario& sc) {
  FringeModel m;
  m.mean_intensity = sc.fringes.mean_intensity;
  m.visibility = sc.fringes.visibility ? *sc.fringes.visibility : model_visibility(sc);
  m.background = sc.fringes.background;
  return m;
}

inline void diffract_scan_cmd(Run& run) {
  const auto sc = run.load();
  const auto& e = sc.diffract;
  const auto& g = sc.gratings[static_cast<std::size_t>(e.mirror - 1)];
  Collimation col{sc.geometry.e_0, sc.geometry.e_1, sc.geometry.z_S1 - sc.geometry.z_S0, e.slit_samples};
  DiffractionScanConfig cfg;
  cfg.theta_min = e.theta_min;
  cfg.theta_max = e.theta_max;
  cfg.points = e.points;
  cfg.q = g.q;
  cfg.tau = g.tau;
  cfg.profile = e.profile;
  cfg.model = e.model;
  CsvTable csv({"theta_y_rad", "transmitted_fraction"});
  for (const auto& pt : diffraction_scan(sc.species, sc.beam, col, cfg)) csv.row(pt.theta_y, pt.transmitted);
  run.write("diffract_scan.csv", csv.str());
}

inline void fringes_cmd(Run& run) {
  const auto sc = run.load();
  const auto& e = sc.fringes;
  const auto model = fringe_model(sc);
  const auto phase = piezo_phase(sc);
  const auto xs = grid(e.x3_start_m, e.x3_stop_m, e.points);
  CsvTable csv({"x3_m", "I1_counts_per_s"});
  for (double x : xs) csv.row(x, model.rate(phase(x)));
  run.write("fringes_model.csv", csv.str());

  BurstNoise bursts;
  bursts.enabled = e.bursts;
  const auto trace = synthesize_counts(model, xs, phase, e.counting_time, sc.seed, bursts);
  run.write_trace_files("fringes_trace", trace);
  FringeModel bg{0.0, 0.0, e.background};
  std::vector<double> idx;
  for (int i = 0; i < e.background_points; ++i) idx.push_back(i);
  if (idx.size() < 2) idx.push_back(1.0);
  const auto btrace = synthesize_counts(bg, idx, PhaseLaw{}, e.counting_time, detail::splitmix64(sc.seed ^ 0xB6ULL));
  run.write_trace_files("fringes_background", btrace);
}

inline void tilt_scan_cmd(Run& run) {
  const auto sc = run.load();
  const auto& e = sc.tilt;
  const int p = sc.gratings[1].order;
  TiltOptions opt;
  opt.apodization = e.apodization;
  CsvTable csv({"theta_z_rad", "visibility"});
  for (double th : grid(e.theta_min, e.theta_max, e.points)) {
    std::array<double, 3> t{sc.gratings[0].tilt_z, sc.gratings[1].tilt_z, sc.gratings[2].tilt_z};
    t[static_cast<std::size_t>(e.mirror - 1)] += th;
    csv.row(th, e.max_visibility * tilt_visibility(t[0], t[1], t[2], p, sc.geometry, opt));
  }
  run.write("tilt_scan.csv", csv.str());
}

inline void mismatch_scan_cmd(Run& run) {
  const auto sc = run.load();
  const auto& e = sc.mismatch;
  const int p = sc.gratings[1].order;
  CsvTable csv({"delta_L_m", "visibility"});
  for (double d : grid(e.delta_min, e.delta_max, e.points)) {
    csv.row(d, e.max_visibility * mismatch_visibility(d - e.z_c, p, sc.geometry));
  }
  run.write("mismatch_scan.csv", csv.str());
}

inline void slit_scan_cmd(Run& run) {
  const auto sc = run.load();
  const auto& e = sc.slit;
  SlitModelConfig cfg;
  cfg.gratings = sc.gratings;
  cfg.beam = sc.beam;
  cfg.source_samples = e.source_samples;
  cfg.collimation_samples = e.collimation_samples;
  cfg.seed = sc.seed;
  CsvTable csv({"slit_width_m", "I0", "visibility"});
  for (const auto& r : slit_scan(e.axis, grid(e.width_min, e.width_max, e.points), sc.species, sc.geometry, cfg)) {
    csv.row(r.width, r.mean_intensity, r.visibility);
  }
  run.write("slit_scan.csv", csv.str());
}

// Phase splay per ampere from the coil modelled as a point dipole.
inline double coil_k_phi(const Scenario& sc) {
  auto m = sc.magnetic;
  m.dipole_moment = sc.magnetic_scan.moment_per_current;
  return gradient_phase(m, sc.gratings[1].order, sc.beam.mean, sc.species, sc.geometry);
}

inline void magnetic_scan_cmd(Run& run) {
  const auto sc = run.load();
  const double k_phi = sc.magnetic_scan.k_phi ? *sc.magnetic_scan.k_phi : coil_k_phi(sc);
  if (sc.beam.relative_width() > 0.3) run.warn("alpha/u > 0.3: closed-form velocity average is outside its range");
  const auto& e = sc.magnetic_scan;
  const double alpha = sc.beam.relative_width();
  const auto currents = grid(e.current_min, e.current_max, e.points);
  CsvTable csv({"current_A", "visibility", "visibility_sigma"});
  if (e.noise) {
    const RevivalCounting counting{e.mean_intensity, e.background, e.counting_time, e.fringe_points};
    for (const auto& r : synthesize_revival(currents, k_phi, alpha, e.max_visibility, counting, sc.seed)) {
      csv.row(r.current, r.visibility, r.sigma);
    }
  } else {
    for (const auto& r : revival_curve(currents, k_phi, alpha, e.max_visibility)) csv.row(r.current, r.visibility, 0.0);
  }
  run.write("magnetic_scan.csv", csv.str());
}

inline std::vector<DefectPoint> read_defect_points(const std::string& path, const std::string& column) {
  const auto d = parse_csv(read_text(path), path);
  const auto ix = d.column(column, path);
  const auto iv = d.column("visibility", path);
  std::optional<std::size_t> is;
  for (std::size_t i = 0; i < d.header.size(); ++i) {
    if (d.header[i] == "visibility_sigma") is = i;
  }
  std::vector<DefectPoint> pts;
  for (const auto& r : d.rows) pts.push_back({r[ix], r[iv], is ? r[*is] : 0.0});
  return pts;
}

inline json sinc_to_json(const SincFit& f, SincLaw law) {
  const bool tilt = law == SincLaw::tilt;
  return {{"law", tilt ? "tilt" : "mismatch"},
          {"max_visibility", f.v0},
          {"max_visibility_sigma", f.sigma_v0},
          {tilt ? "center_rad" : "z_c_m", f.center},
          {tilt ? "center_rad_sigma" : "z_c_m_sigma", f.sigma_center},
          {"scale", f.scale},
          {"scale_sigma", f.sigma_scale},
          {tilt ? "first_zero_rad" : "first_zero_m", f.zero},
          {tilt ? "first_zero_rad_sigma" : "first_zero_m_sigma", f.sigma_zero},
          {"covariance", matrix_to_json(f.covariance)},
          {"chi2", f.chi2},
          {"dof", f.dof}};
}

inline void fit_cmd(Run& run, const Options& opt) {
  const auto sc = run.load();
  if (opt.input.empty()) throw ValidationError("--input", "required");
  run.add_input(opt.input, read_text(opt.input));
  if (opt.kind == "fringes") {
    auto trace = read_trace(opt.input);
    FringeFitOptions fo;
    fo.phase_degree = opt.degree;
    if (opt.background_rate) {
      fo.known_background = *opt.background_rate;
    } else if (!opt.background.empty()) {
      run.add_input(opt.background, read_text(opt.background));
      fo.background_trace = read_trace(opt.background);
    } else {
      throw ValidationError("--background", "give a background trace or --background-rate");
    }
    run.write("fit_fringes.json", dump(fit_to_json(fit_fringes(trace, fo))));
  } else if (opt.kind == "tilt" || opt.kind == "mismatch") {
    const bool tilt = opt.kind == "tilt";
    SincFitOptions so;
    so.law = tilt ? SincLaw::tilt : SincLaw::mismatch;
    so.order = sc.gratings[1].order;
    so.geometry = sc.geometry;
    const auto pts = read_defect_points(opt.input, tilt ? "theta_z_rad" : "delta_L_m");
    run.write("fit_" + opt.kind + ".json", dump(sinc_to_json(fit_sinc(pts, so), so.law)));
  } else if (opt.kind == "revival") {
    const auto d = parse_csv(read_text(opt.input), opt.input);
    const auto ic = d.column("current_A", opt.input);
    const auto iv = d.column("visibility", opt.input);
    const auto is = d.column("visibility_sigma", opt.input);
    std::vector<RevivalMeasurement> pts;
    for (const auto& r : d.rows) pts.push_back({r[ic], r[iv], r[is]});
    const auto f = extract_velocity_spread(pts);
    json j = {{"alpha_over_u", f.alpha_over_u}, {"alpha_over_u_sigma", f.sigma_alpha_over_u},
              {"k_phi_rad_per_A", f.k_phi},     {"k_phi_rad_per_A_sigma", f.sigma_k_phi},
              {"max_visibility", f.v0},         {"max_visibility_sigma", f.sigma_v0},
              {"covariance", matrix_to_json(f.covariance)},
              {"chi2", f.chi2},                 {"dof", f.dof}};
    run.write("fit_revival.json", dump(j));
  } else {
    throw ValidationError("--kind", "expected fringes|tilt|mismatch|revival");
  }
}

inline void design_pulse_cmd(Run& run) {
  const auto sc = run.load();
  json rows = json::array();
  const char* names[] = {"M1", "M2", "M3"};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& g = sc.gratings[i];
    if (!(g.tau > 0.0)) throw ValidationError("gratings." + std::to_string(i) + ".tau", "must be > 0");
    const double qm = design_pulse(g.order, g.tau, PulseTarget::mirror);
    const double qs = design_pulse(g.order, g.tau, PulseTarget::splitter);
    json r = {{"mirror", names[i]},
              {"order", g.order},
              {"tau", g.tau},
              {"q", g.q},
              {"q_mirror", qm},
              {"q_splitter", qs},
              {"q_splitter_over_q_mirror", qs / qm},
              {"transfer_probability", rabi_probability(g)}};
    if (g.physical) {
      const auto se = spontaneous_emission_probability(g, sc.species, g.physical->laser.detuning);
      r["spontaneous_emission_probability"] = se.probability;
    }
    rows.push_back(r);
  }
  json j = {{"target", sc.design.target == PulseTarget::mirror ? "mirror" : "splitter"},
            {"q_target_for_M2", design_pulse(sc.gratings[1].order, sc.gratings[1].tau, sc.design.target)},
            {"gratings", rows}};
  run.write("design_pulse.json", dump(j));
}

inline void constants_cmd(Run& run) {
  run.load();
  run.write("constants.json", dump(run.constants().table));
}

inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Bragg-diffraction atom interferometer simulator"};
  app.set_version_flag("--version", version);
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"diffract-scan", "transmitted fraction against mirror angle"},
      {"fringes", "fringe signal and synthetic count traces against x3"},
      {"tilt-scan", "visibility against a mirror rotation about z"},
      {"mismatch-scan", "visibility against the grating spacing mismatch"},
      {"slit-scan", "mean intensity and visibility against a slit width"},
      {"magnetic-scan", "visibility against the coil current"},
      {"fit", "fit fringes, sinc envelopes or revival data from a CSV"},
      {"design-pulse", "mirror and splitter couplings for the scenario gratings"},
      {"constants", "dump the constant table"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", opt.scenario, "scenario JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "random seed (overrides the scenario)");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--set", opt.overrides, "override a scenario field, key.path=value");
    if (name == "fit") {
      sub->add_option("--input", opt.input, "CSV to fit")->required()->check(CLI::ExistingFile);
      sub->add_option("--kind", opt.kind, "fringes|tilt|mismatch|revival")
          ->check(CLI::IsMember({"fringes", "tilt", "mismatch", "revival"}));
      sub->add_option("--background", opt.background, "background count trace")->check(CLI::ExistingFile);
      sub->add_option("--background-rate", opt.background_rate, "known background, counts/s");
      sub->add_option("--degree", opt.degree, "phase polynomial degree")->check(CLI::Range(1, 8));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  Run r(name, opt);
  try {
    if (name == "diffract-scan") diffract_scan_cmd(r);
    else if (name == "fringes") fringes_cmd(r);
    else if (name == "tilt-scan") tilt_scan_cmd(r);
    else if (name == "mismatch-scan") mismatch_scan_cmd(r);
    else if (name == "slit-scan") slit_scan_cmd(r);
    else if (name == "magnetic-scan") magnetic_scan_cmd(r);
    else if (name == "fit") fit_cmd(r, opt);
    else if (name == "design-pulse") design_pulse_cmd(r);
    else if (name == "constants") constants_cmd(r);
    r.finish();
  } catch (const ValidationError& e) {
    err << "atomint " << name << ": invalid input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "atomint " << name << ": error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace atomint::cli
