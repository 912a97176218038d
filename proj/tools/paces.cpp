// paces command-line driver: dynamics runs, absorption spectra, dense-oracle
// verification and model reports, configured through sectioned key = value
// files (see configs/ for examples).

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "paces/config.hpp"
#include "paces/engine.hpp"
#include "paces/io.hpp"
#include "paces/oracle.hpp"
#include "paces/spectra.hpp"

namespace fs = std::filesystem;
using namespace paces;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "run configuration file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override the truncation seed")->each([&](const std::string&) {
        opts.seed_set = true;
    });
    cmd->add_option("--threads", opts.threads, "worker thread count");
    cmd->add_flag("--deterministic", opts.deterministic,
                  "bit-reproducible single-threaded execution");
}

LoadedConfig load(const CommonOpts& opts) {
    if (opts.deterministic)
        set_thread_count(1);
    else if (opts.threads > 0)
        set_thread_count(opts.threads);
    auto file = parse_config_file(opts.config_path);
    return load_run_config(file, opts.seed, opts.seed_set);
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
    fs::create_directories(opts.out_dir);
    return (fs::path(opts.out_dir) / name).string();
}

void report_warnings(const RunResult& result) {
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
}

/// Writes the dynamics outputs; returns nonzero if the run aborted early.
int emit_run_outputs(const CommonOpts& opts, const LoadedConfig& cfg, const RunResult& result,
                     const std::string& subcommand) {
    const std::string prov = "paces " + subcommand + " " + cfg.provenance;
    write_observables_csv(out_path(opts, "observables.csv"), prov, result.trajectory,
                          cfg.run.model.geometry.sites());
    write_diagnostics_csv(out_path(opts, "diagnostics.csv"), prov, result.diagnostics);
    write_checkpoint(out_path(opts, "checkpoint.bin"), result.final_state);
    for (std::size_t i = 0; i < result.histograms.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof(name), "histogram_%04zu.csv", i);
        write_histogram_csv(out_path(opts, name), prov, result.histograms[i].first,
                            result.histograms[i].second);
    }
    report_warnings(result);
    if (!result.error.empty()) {
        std::cerr << "error: run aborted at " << result.error
                  << "\nlast good state written to checkpoint.bin (t=" << result.final_state.t
                  << ")\n";
        return 1;
    }
    return 0;
}

int cmd_dynamics(const CommonOpts& opts) {
    auto cfg = load(opts);
    auto result = run(cfg.run);
    const int rc = emit_run_outputs(opts, cfg, result, "dynamics");
    if (rc == 0)
        std::cout << "dynamics: " << result.diagnostics.size() << " steps, final norm "
                  << state_norm(result.final_state) << ", outputs in " << opts.out_dir << "\n";
    return rc;
}

int cmd_spectrum(const CommonOpts& opts) {
    auto cfg = load(opts);
    std::vector<SignalSample> signal;
    int rc = 0;
    if (!cfg.spectrum.input.empty()) {
        signal = read_observables_signal(cfg.spectrum.input);
    } else {
        if (cfg.run.initial.kind != InitialStateSpec::Kind::optical)
            std::cerr << "note: spectrum runs usually start from initial = optical\n";
        auto result = run(cfg.run);
        rc = emit_run_outputs(opts, cfg, result, "spectrum");
        if (rc != 0) return rc;
        for (const auto& row : result.trajectory) signal.push_back({row.t, row.amp});
    }
    damp_signal(signal, cfg.spectrum.spectrum.tau);
    auto spec = transform(signal, cfg.spectrum.spectrum);
    write_spectrum_csv(out_path(opts, "spectrum.csv"), "paces spectrum " + cfg.provenance, spec);
    std::cout << "spectrum: " << spec.size() << " frequency bins written to "
              << out_path(opts, "spectrum.csv") << "\n";
    return rc;
}

int cmd_oracle_check(const CommonOpts& opts) {
    auto cfg = load(opts);
    auto terms = build_model(cfg.run.model);
    auto sys = dense_build(terms);
    auto prop = dense_diagonalize(sys);

    auto result = run(cfg.run, terms);
    report_warnings(result);
    if (!result.error.empty()) {
        std::cout << "oracle-check: FAIL (run aborted at " << result.error << ")\n";
        return 1;
    }

    Eigen::VectorXcd psi0 = Eigen::VectorXcd::Zero(sys.dimension());
    {
        RunConfig seed_cfg = cfg.run;
        seed_cfg.m_init = 0;
        seed_cfg.m = 0;
        auto [seed_state, seed_space] = initialize(seed_cfg, terms);
        std::vector<std::uint32_t> occ(terms.layout.site_count());
        for (std::size_t i = 0; i < seed_state.table->rows; ++i) {
            unpack_state<Word>(terms.layout, seed_state.table->row(i), occ);
            psi0[static_cast<Eigen::Index>(occupation_index(terms.layout, occ))] = seed_state.coeff[i];
        }
    }
    Eigen::VectorXcd ref = dense_evolve(prop, psi0, result.final_state.t);
    Eigen::VectorXcd got = Eigen::VectorXcd::Zero(sys.dimension());
    std::vector<std::uint32_t> occ(terms.layout.site_count());
    const auto& table = *result.final_state.table;
    for (std::size_t i = 0; i < table.rows; ++i) {
        unpack_state<Word>(terms.layout, table.row(i), occ);
        got[static_cast<Eigen::Index>(occupation_index(terms.layout, occ))] =
            result.final_state.coeff[i];
    }
    const double fidelity = std::abs(ref.dot(got));
    const double norm_err = std::abs(got.norm() - 1.0);
    const bool pass = fidelity >= 1.0 - 1e-10;
    std::printf("oracle-check: dimension %zu, t=%.6g\n", sys.dimension(), result.final_state.t);
    std::printf("  fidelity |<paces|exact>| = %.15f\n", fidelity);
    std::printf("  |norm - 1|               = %.3e\n", norm_err);
    std::printf("oracle-check: %s (threshold 1 - 1e-10)\n", pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

int cmd_model_info(const CommonOpts& opts) {
    auto cfg = load(opts);
    auto terms = build_model(cfg.run.model);
    const double dim = model_dimension(cfg.run.model);
    const double nnz = predicted_nnz(cfg.run.model);
    const double density = predicted_density(cfg.run.model);

    std::printf("model-info\n");
    std::printf("  lattice sites        : %u\n", cfg.run.model.geometry.sites());
    std::printf("  hilbert dimension    : %.6g\n", dim);
    std::printf("  predicted nonzeros   : %.6g\n", nnz);
    std::printf("  predicted density    : %.6g  (one nonzero per %.6g elements)\n", density,
                1.0 / density);
    std::printf("  packed row           : %u words of %u bits (%u payload bits)\n",
                terms.layout.words_per_row, SiteLayout<Word>::word_bits, terms.layout.total_bits);
    std::printf("  table memory at q_nom: %.6g MiB\n",
                double(table_memory_estimate(terms.layout, cfg.run.q_nom)) / 8 / 1024 / 1024);

    if (terms.has_exciton_register()) {
        RunConfig seed_cfg = cfg.run;
        seed_cfg.m_init = 0;
        seed_cfg.m = 0;
        auto [seed_state, unused] = initialize(seed_cfg, terms);
        for (int k = 1; k <= std::max(1, cfg.run.m); ++k)
            std::printf("  connectivity kappa^(%d) of the initial support: %.6g\n", k,
                        connectivity(*seed_state.table, terms, k));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse-state quantum dynamics with co-evolving subspaces"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto* dynamics = app.add_subcommand("dynamics", "evolve a state and emit observables");
    auto* spectrum = app.add_subcommand("spectrum", "linear absorption from the dipole signal");
    auto* oracle = app.add_subcommand("oracle-check", "compare against dense exact propagation");
    auto* info = app.add_subcommand("model-info", "dimension, sparsity and connectivity report");
    for (auto* cmd : {dynamics, spectrum, oracle, info}) add_common(cmd, opts);

    CLI11_PARSE(app, argc, argv);
    try {
        if (dynamics->parsed()) return cmd_dynamics(opts);
        if (spectrum->parsed()) return cmd_spectrum(opts);
        if (oracle->parsed()) return cmd_oracle_check(opts);
        if (info->parsed()) return cmd_model_info(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
