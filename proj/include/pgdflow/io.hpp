#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pgdflow/cases.hpp"
#include "pgdflow/pgd.hpp"
#include "pgdflow/simple.hpp"

namespace pgdflow {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::string case_name;
    CaseParameters params;
    AdsSettings ads;
    std::filesystem::path output_dir = "out";
    bool write_vtk = true;
    bool write_csv = true;
};

RunConfig default_config(const std::string& case_name);

/// JSON config. Missing keys keep the case defaults; unknown keys and values
/// the case registry rejects throw ConfigError. Layout:
///
///   { "case": "lid",
///     "mesh": {"cells": 96}, "parametric": {"intervals": 40},
///     "discretisation": {"upwind_blend": 0, "mean_boundary_convection": true},
///     "kovasznay": {"taylor_order": 4}, "jets": {"smooth": false},
///     "solver": {"velocity_relaxation", "pressure_relaxation", "pseudo_time",
///                "momentum_tolerance", "continuity_tolerance", "max_iterations"},
///     "pgd": {"criterion": "relative_amplitude|first_amplitude|amplitude_sum",
///             "tolerance", "amplitude_tolerance", "residual_tolerance",
///             "max_alternating", "max_modes", "predictor_amplitude",
///             "residual_evaluation": "automatic|separated|direct",
///             "cross_convection": "lagged|previous_increment"},
///     "output": {"dir": "out", "vtk": true, "csv": true} }
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

// ---------------------------------------------------------------------------
// Field output

/// Legacy ASCII VTK, STRUCTURED_POINTS with one cell array.
void write_vtk(const std::filesystem::path& path, const Mesh2D& mesh, const std::string& name,
               const VectorField& u);
void write_vtk(const std::filesystem::path& path, const Mesh2D& mesh, const std::string& name,
               const ScalarField& p);

/// x,y,ux,uy,p per cell.
void write_fields_csv(const std::filesystem::path& path, const Mesh2D& mesh, const VectorField& u,
                      const ScalarField& p);
void write_residuals_csv(const std::filesystem::path& path, const std::vector<OuterResidual>& history);

// ---------------------------------------------------------------------------
// Expansion archive
//
//   manifest.json
//   modes/fu_####.bin   cells then boundary faces, (x, y) pairs, float64 LE
//   modes/fp_####.bin   cells then boundary faces, float64 LE
//   modes/phi_####.csv  mu,phi
//   amplitudes.csv      mode,sigma_u,sigma_p,eta,iterations (computed modes)

struct Archive {
    RunConfig config;
    FlowCase flow;             // rebuilt from the config; owns mesh and grid
    PgdExpansion expansion;
    std::vector<ModeReport> reports;
    bool complete = false;
    std::string status;
    std::string message;
};

void save_archive(const std::filesystem::path& dir, const RunConfig& config, const PgdExpansion& expansion,
                  const std::vector<ModeReport>& reports, bool complete, const std::string& status,
                  const std::string& message = {});

/// Throws std::runtime_error on missing files or shape mismatches.
Archive load_archive(const std::filesystem::path& dir);

}  // namespace pgdflow
