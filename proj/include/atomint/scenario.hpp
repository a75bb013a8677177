#pragma once

// Scenario files: JSON with units in every physical field name. Unknown
// fields and wrong types are rejected with the dotted path of the field.

#include <atomint/bragg.hpp>
#include <atomint/errors.hpp>
#include <atomint/interferometer.hpp>
#include <atomint/io.hpp>
#include <atomint/kinematics.hpp>
#include <atomint/magnetic.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace atomint {

namespace detail {

// Reads fields of one JSON object and remembers which keys were consumed.
class FieldReader {
 public:
  FieldReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  [[nodiscard]] std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback) {
    if (!take(key)) return fallback;
    return number_of(j_.at(key), at(key));
  }

  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ValidationError(at(key), "must be > 0");
    return v;
  }

  double non_negative(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v >= 0.0)) throw ValidationError(at(key), "must be >= 0");
    return v;
  }

  std::optional<double> optional_number(const std::string& key) {
    if (!take(key)) return std::nullopt;
    return number_of(j_.at(key), at(key));
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) {
    if (!take(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ValidationError(at(key), "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi) {
      throw ValidationError(at(key), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!take(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ValidationError(at(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key) {
    if (!take(key)) return {};
    if (!j_.at(key).is_string()) throw ValidationError(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!take(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ValidationError(at(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
    if (!take(key)) return fallback;
    if (!j_.at(key).is_string()) throw ValidationError(at(key), "expected a string");
    const auto s = j_.at(key).get<std::string>();
    for (const auto& a : allowed) {
      if (a == s) return s;
    }
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : "|") + a;
    throw ValidationError(at(key), "expected one of " + list);
  }

  // Sub-object; an absent key yields an empty object.
  FieldReader object(const std::string& key) {
    static const json empty = json::object();
    if (!take(key)) return FieldReader(empty, at(key));
    return FieldReader(j_.at(key), at(key));
  }

  const json* array(const std::string& key) {
    if (!take(key)) return nullptr;
    if (!j_.at(key).is_array()) throw ValidationError(at(key), "expected an array");
    return &j_.at(key);
  }

  // Every key not read so far is an error.
  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ValidationError(at(k), "unknown field");
    }
  }

 private:
  bool take(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  static double number_of(const json& v, const std::string& where) {
    if (!v.is_number()) throw ValidationError(where, "expected a number");
    return v.get<double>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

struct FringesExperiment {
  double x3_start_m = 0.0;
  double x3_stop_m = 1.2e-6;
  int points = 200;
  double mean_intensity = 23710.0;    // counts/s
  std::optional<double> visibility;   // absent: from the grating model
  double background = 2000.0;         // counts/s
  double counting_time = 0.1;         // s
  double piezo_quadratic = 0.0;       // 1/m, relative phase nonlinearity
  int background_points = 50;
  bool bursts = false;
};

struct DiffractExperiment {
  double theta_min = -3e-4;
  double theta_max = 4e-4;
  int points = 141;
  int mirror = 1;  // index 1..3 of the grating used
  ScanModel model = ScanModel::propagator;
  PulseProfile profile = PulseProfile::square;
  int slit_samples = 7;
};

struct TiltExperiment {
  double theta_min = -5e-5;
  double theta_max = 5e-5;
  int points = 101;
  int mirror = 2;
  double max_visibility = 1.0;
  Apodization apodization = Apodization::none;
};

struct MismatchExperiment {
  double delta_min = -2e-3;
  double delta_max = 2e-3;
  int points = 101;
  double max_visibility = 1.0;
  double z_c = 0.0;  // m, offset of the visibility maximum
};

struct SlitExperiment {
  SlitAxis axis = SlitAxis::detector;
  double width_min = 5e-6;
  double width_max = 150e-6;
  int points = 30;
  int source_samples = 48;
  int collimation_samples = 48;
};

struct MagneticExperiment {
  double current_min = 0.0;
  double current_max = 8.0;
  int points = 81;
  std::optional<double> k_phi;          // rad/A; absent: from the coil model
  double moment_per_current = 1.75;     // A m^2 per A (350 turns of 50 cm^2)
  double max_visibility = 0.845;
  bool noise = true;
  double mean_intensity = 23710.0;
  double background = 2000.0;
  double counting_time = 0.1;
  int fringe_points = 200;
};

struct DesignExperiment {
  PulseTarget target = PulseTarget::splitter;
};

struct Scenario {
  Species species;
  VelocityDistribution beam;
  InterferometerGeometry geometry;
  std::array<GratingConfig, 3> gratings;
  MagneticScenario magnetic;
  FringesExperiment fringes;
  DiffractExperiment diffract;
  TiltExperiment tilt;
  MismatchExperiment mismatch;
  SlitExperiment slit;
  MagneticExperiment magnetic_scan;
  DesignExperiment design;
  std::uint64_t seed = 0;
  Diagnostics diagnostics;
};

// Applies key=value with a dotted path ("gratings.1.q=0.3"); the value is
// parsed as JSON when possible, otherwise taken as a string.
inline void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError(assignment, "override must be key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ValidationError(key, "empty path component");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      const auto res = std::from_chars(part.data(), part.data() + part.size(), idx);
      if (res.ec != std::errc{} || res.ptr != part.data() + part.size() || idx >= node->size()) {
        throw ValidationError(key, "bad array index '" + part + "'");
      }
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ValidationError(key, "cannot descend into a non-object");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

namespace detail {

inline GratingConfig read_grating(FieldReader r, const Species& species, Diagnostics& diag) {
  GratingConfig g;
  g.order = static_cast<int>(r.integer("order", 1, 1, 3));
  g.tilt_y = r.number("tilt_y_rad", 0.0);
  g.tilt_z = r.number("tilt_z_rad", 0.0);
  g.x_position = r.number("x_m", 0.0);
  const bool has_laser = r.has("laser");
  const bool has_dimensionless = r.has("q") || r.has("tau");
  if (has_laser && has_dimensionless) {
    throw ValidationError(r.at("laser"), "give either q/tau or a laser block, not both");
  }
  if (has_laser) {
    auto l = r.object("laser");
    LaserField laser;
    laser.wavelength = species.transition_wavelength;
    laser.detuning = two_pi * 1e9 * l.number("detuning_GHz", 0.0);
    laser.power = 1e-3 * l.non_negative("power_mW", 0.0);
    laser.waist = l.positive("waist_m", 0.0);
    laser.profile = l.choice("profile", "gaussian", {"gaussian", "flat_top"}) == "gaussian" ? BeamProfile::gaussian
                                                                                                : BeamProfile::flat_top;
    const double v = l.positive("velocity_m_per_s", 1060.0);
    l.finish();
    if (laser.detuning == 0.0) throw ValidationError(r.at("laser.detuning_GHz"), "must be non-zero");
    laser.validate(species, &diag);
    const auto keep = g;
    g = grating_from_physical(keep.order, laser, species, v);
    g.tilt_y = keep.tilt_y;
    g.tilt_z = keep.tilt_z;
    g.x_position = keep.x_position;
  } else {
    g.q = r.non_negative("q", 0.0);
    g.tau = r.non_negative("tau", 0.0);
  }
  r.finish();
  return g;
}

}  // namespace detail

inline Scenario parse_scenario(const json& root, const ConstantTable& constants) {
  using detail::FieldReader;
  Scenario sc;
  FieldReader top(root, "");
  sc.species = constants.species(top.choice("species", "Li7", {"Li7", "Li6"}));
  sc.seed = top.unsigned_integer("seed", 0);
  top.text("description");
  {
    auto b = top.object("beam");
    sc.beam.mean = b.positive("mean_velocity_m_per_s", 1060.0);
    const double rel = b.non_negative("relative_width", 0.0);
    sc.beam.width = rel * sc.beam.mean;
    sc.beam.quadrature_order = static_cast<int>(b.integer("quadrature_order", 16, 1, 200));
    b.finish();
    try {
      sc.beam.validate();
    } catch (const DomainError& e) {
      throw ValidationError("beam", e.what());
    }
  }
  {
    auto g = top.object("geometry");
    auto& geo = sc.geometry;
    geo.z_S0 = g.number("z_S0_m", geo.z_S0);
    geo.z_S1 = g.number("z_S1_m", geo.z_S1);
    geo.z_M1 = g.number("z_M1_m", geo.z_M1);
    geo.z_M2 = g.number("z_M2_m", geo.z_M2);
    geo.z_M3 = g.number("z_M3_m", geo.z_M3);
    geo.z_SD = g.number("z_SD_m", geo.z_SD);
    geo.z_D = g.number("z_D_m", geo.z_D);
    geo.e_0 = g.positive("e_0_m", geo.e_0);
    geo.e_1 = g.positive("e_1_m", geo.e_1);
    geo.e_D = g.positive("e_D_m", geo.e_D);
    geo.h_D = g.positive("h_D_m", geo.h_D);
    geo.source_to_detector = g.non_negative("L04_m", 0.0);
    geo.grating_period = sc.species.transition_wavelength / 2.0;
    g.finish();
    try {
      geo.validate();
    } catch (const DomainError& e) {
      throw ValidationError("geometry", e.what());
    }
  }
  if (const json* arr = top.array("gratings")) {
    if (arr->size() != 3) throw ValidationError("gratings", "expected 3 entries (M1, M2, M3)");
    for (std::size_t i = 0; i < 3; ++i) {
      sc.gratings[i] = detail::read_grating(FieldReader((*arr)[i], "gratings." + std::to_string(i)), sc.species,
                                            sc.diagnostics);
    }
    for (std::size_t i = 1; i < 3; ++i) {
      if (sc.gratings[i].order != sc.gratings[0].order) {
        throw ValidationError("gratings." + std::to_string(i) + ".order", "all three gratings must use the same order");
      }
    }
  } else {
    // Ideal splitter/mirror/splitter at tau = 1.
    const double qm = design_pulse(1, 1.0, PulseTarget::mirror);
    const double qs = design_pulse(1, 1.0, PulseTarget::splitter);
    sc.gratings = {GratingConfig{1, qs, 1.0}, GratingConfig{1, qm, 1.0}, GratingConfig{1, qs, 1.0}};
  }
  {
    auto m = top.object("magnetic");
    const double b = m.positive("field_T", 4e-5);
    const double len = m.positive("field_length_m", 1.21);
    sc.magnetic.field = FieldProfile::uniform(b, len);
    sc.magnetic.dipole_distance = m.positive("dipole_distance_m", 0.2);
    sc.magnetic.dipole_z = m.number("dipole_z_m", sc.geometry.z_M2);
    sc.magnetic.g_F = m.positive("g_F", 0.5);
    m.finish();
  }
  auto ex = top.object("experiment");
  {
    auto f = ex.object("fringes");
    auto& e = sc.fringes;
    e.x3_start_m = f.number("x3_start_m", e.x3_start_m);
    e.x3_stop_m = f.number("x3_stop_m", e.x3_stop_m);
    if (!(e.x3_stop_m != e.x3_start_m)) throw ValidationError(f.at("x3_stop_m"), "must differ from x3_start_m");
    e.points = static_cast<int>(f.integer("points", e.points, 2, 1000000));
    e.mean_intensity = f.non_negative("mean_intensity_counts_per_s", e.mean_intensity);
    e.visibility = f.optional_number("visibility");
    if (e.visibility && !(*e.visibility >= 0.0 && *e.visibility <= 1.0)) {
      throw ValidationError(f.at("visibility"), "must be in [0, 1]");
    }
    e.background = f.non_negative("background_counts_per_s", e.background);
    e.counting_time = f.positive("counting_time_s", e.counting_time);
    e.piezo_quadratic = f.number("piezo_quadratic_per_m", e.piezo_quadratic);
    e.background_points = static_cast<int>(f.integer("background_points", e.background_points, 1, 1000000));
    e.bursts = f.boolean("burst_noise", e.bursts);
    f.finish();
  }
  {
    auto d = ex.object("diffract_scan");
    auto& e = sc.diffract;
    e.theta_min = d.number("theta_min_rad", e.theta_min);
    e.theta_max = d.number("theta_max_rad", e.theta_max);
    e.points = static_cast<int>(d.integer("points", e.points, 2, 100000));
    e.mirror = static_cast<int>(d.integer("mirror", e.mirror, 1, 3));
    e.model = d.choice("model", "propagator", {"propagator", "closed_form"}) == "propagator" ? ScanModel::propagator
                                                                                            : ScanModel::closed_form;
    e.profile = d.choice("pulse_profile", "square", {"square", "gaussian"}) == "square" ? PulseProfile::square
                                                                                        : PulseProfile::gaussian;
    e.slit_samples = static_cast<int>(d.integer("slit_samples", e.slit_samples, 1, 1000));
    d.finish();
  }
  {
    auto t = ex.object("tilt_scan");
    auto& e = sc.tilt;
    e.theta_min = t.number("theta_min_rad", e.theta_min);
    e.theta_max = t.number("theta_max_rad", e.theta_max);
    e.points = static_cast<int>(t.integer("points", e.points, 2, 100000));
    e.mirror = static_cast<int>(t.integer("mirror", e.mirror, 1, 3));
    e.max_visibility = t.non_negative("max_visibility", e.max_visibility);
    e.apodization = t.choice("apodization", "none", {"none", "gaussian"}) == "none" ? Apodization::none
                                                                                    : Apodization::gaussian;
    t.finish();
  }
  {
    auto m = ex.object("mismatch_scan");
    auto& e = sc.mismatch;
    e.delta_min = m.number("delta_L_min_m", e.delta_min);
    e.delta_max = m.number("delta_L_max_m", e.delta_max);
    e.points = static_cast<int>(m.integer("points", e.points, 2, 100000));
    e.max_visibility = m.non_negative("max_visibility", e.max_visibility);
    e.z_c = m.number("z_c_m", e.z_c);
    m.finish();
  }
  {
    auto s = ex.object("slit_scan");
    auto& e = sc.slit;
    e.axis = s.choice("axis", "detector", {"detector", "collimation"}) == "detector" ? SlitAxis::detector
                                                                                   : SlitAxis::collimation;
    e.width_min = s.positive("width_min_m", e.width_min);
    e.width_max = s.positive("width_max_m", e.width_max);
    e.points = static_cast<int>(s.integer("points", e.points, 2, 100000));
    e.source_samples = static_cast<int>(s.integer("source_samples", e.source_samples, 1, 4096));
    e.collimation_samples = static_cast<int>(s.integer("collimation_samples", e.collimation_samples, 1, 4096));
    s.finish();
  }
  {
    auto m = ex.object("magnetic_scan");
    auto& e = sc.magnetic_scan;
    e.current_min = m.number("current_min_A", e.current_min);
    e.current_max = m.number("current_max_A", e.current_max);
    e.points = static_cast<int>(m.integer("points", e.points, 2, 100000));
    e.k_phi = m.optional_number("k_phi_rad_per_A");
    e.moment_per_current = m.number("dipole_moment_A_m2_per_A", e.moment_per_current);
    e.max_visibility = m.non_negative("max_visibility", e.max_visibility);
    e.noise = m.boolean("noise", e.noise);
    e.mean_intensity = m.positive("mean_intensity_counts_per_s", e.mean_intensity);
    e.background = m.non_negative("background_counts_per_s", e.background);
    e.counting_time = m.positive("counting_time_s", e.counting_time);
    e.fringe_points = static_cast<int>(m.integer("fringe_points", e.fringe_points, 8, 100000));
    m.finish();
  }
  {
    auto d = ex.object("design_pulse");
    sc.design.target = d.choice("target", "splitter", {"splitter", "mirror"}) == "splitter" ? PulseTarget::splitter
                                                                                          : PulseTarget::mirror;
    d.finish();
  }
  ex.finish();
  top.finish();
  return sc;
}

}  // namespace atomint
