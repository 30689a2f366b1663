#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace kinrescale {

// Flat, fully-typed run description. Parsing fills scenario defaults first,
// then applies the file's explicit keys, so a rendered effective config
// re-parses to the identical value regardless of the defaults it started
// from. Keys are section-qualified: [collision] e = 0.9 is "collision.e".
struct RunConfig {
  // [scenario]
  std::string scenario = "custom";  // test1..test5 | custom
  std::string mode = "uncoupled";   // test1 energy law: coupled | uncoupled
  std::uint64_t seed = 1234;
  double fit_u_min = 0.3;       // oscillation fit window in the cooling log-time
  double fit_u_max = 1.35;      // upper edge of the fit window
  double fit_floor = 1e-12;     // L below this truncates the fit window
  double fit_prominence = 0.08; // required log L dip between adjacent peaks

  // [grid]
  int dx = 1;
  int dv = 1;
  std::array<int, 2> nx{1, 1};
  int nv = 32;
  double extent = 8.0;  // velocity box half-width V
  std::array<double, 2> x_lo{0.0, 0.0};
  std::array<double, 2> x_hi{1.0, 1.0};

  // [collision]
  std::string kind = "none";  // none | elastic | inelastic | esbgk
  double lambda = 1.0;
  double b = 0.0;  // <= 0 selects the normalized default for dv
  double e = 1.0;
  double eps = 1.0;
  int quad_order = 64;

  // [esbgk]
  double nu = 0.0;
  double tau_a = 1.0;
  double tau_c = 0.0;
  std::string tau_on = "pressure";  // pressure | density

  // [bc] faces x_lo, x_hi, y_lo, y_hi
  std::array<std::string, 4> bc{"periodic", "periodic", "periodic", "periodic"};
  double alpha = 1.0;  // diffusive fraction of Maxwell walls
  double T_w = 1.0;
  double u_w = 0.0;  // wall velocity, first component

  // [time]
  double t_end = 1.0;
  double record_dt = 0.1;
  double record_growth = 1.0;  // multiplies the record spacing after each record
  double dt_max = 0.0;         // 0 = no explicit cap

  // [output]
  std::string out_dir = "out";
  bool snapshots = true;
  bool ascii = false;

  bool operator==(const RunConfig&) const = default;
};

// Fills every field from the named scenario's defaults; "custom" leaves the
// construction defaults in place. Unknown names throw ConfigError.
void scenario_defaults(RunConfig& cfg, const std::string& name);

// Two-phase parse: scan for scenario.name, apply its defaults, then apply
// all keys in file order and validate. Errors carry line numbers (syntax)
// or key names (range violations).
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Whole-config consistency checks (also called by parse_config).
void validate_config(const RunConfig& cfg);

// Effective-config text: every key explicit, doubles at 17 significant
// digits, derived constants (cross-section, dissipation constant, drag
// coefficient, Prandtl number, truncation radius) as leading comments.
std::string render_config(const RunConfig& cfg);

}  // namespace kinrescale
