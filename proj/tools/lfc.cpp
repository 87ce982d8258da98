// lfc: prior simulation, synthetic data, inversion and posterior analysis.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numeric error.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lfc/analysis.hpp"
#include "lfc/config.hpp"
#include "lfc/error.hpp"
#include "lfc/forward.hpp"
#include "lfc/likelihood.hpp"
#include "lfc/mesh_prior.hpp"
#include "lfc/profile_prior.hpp"
#include "lfc/rng.hpp"
#include "lfc/sampler.hpp"

namespace fs = std::filesystem;
using namespace lfc;

namespace {

// Seed streams of the master seed.
constexpr std::uint64_t kStreamPrior = 30;
constexpr std::uint64_t kStreamTruth = 31;
constexpr std::uint64_t kStreamData = 32;
constexpr std::uint64_t kStreamChain = 33;
constexpr std::uint64_t kStreamCurve = 34;

std::string numbered(const std::string& stem, long k, int width = 6) {
    std::ostringstream os;
    os << stem << std::setw(width) << std::setfill('0') << k << ".txt";
    return os.str();
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    return os;
}

void write_effective(const RunConfig& cfg, const std::string& command) {
    auto os = open_out(fs::path(cfg.out_dir) / ("effective_" + command + ".cfg"));
    write_config(os, cfg);
}

// Calls f(prior) with the configured prior object.
template <class F>
void with_prior(const RunConfig& cfg, F&& f) {
    if (cfg.prior == PriorKind::Mesh) {
        f(MarkovMeshPrior(build_mesh_spec(cfg)));
    } else {
        f(ProfileMrfPrior(build_profile_table(cfg), cfg.profile_sweeps));
    }
}

// Calls f(likelihood). Class-dependent covariances fall back to the exact
// dense density for acceptance, which limits the lattice size.
template <class F>
void with_likelihood(const ForwardModel& fm, const SeismicCube& cube, F&& f) {
    if (fm.stats.class_independent()) {
        LikelihoodEngine engine(fm, cube.dims);
        f(StructuredLikelihood{&engine, &cube});
    } else {
        LikelihoodEngine pooled(pooled_model(fm), cube.dims);
        DenseLikelihood exact(fm, cube.dims);
        f(HeteroscedasticLikelihood{&pooled, &exact, &cube});
    }
}

SeismicCube load_cube(const RunConfig& cfg) {
    std::ifstream is(cfg.cube_path());
    if (!is) throw UsageError("cannot open cube file '" + cfg.cube_path() + "'");
    SeismicCube cube = read_cube(is);
    if (cube.dims != cfg.dims()) {
        throw UsageError("cube is " + std::to_string(cube.dims.rows) + "x" + std::to_string(cube.dims.cols) +
                         " but the config lattice is " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols));
    }
    return cube;
}

// ---- commands ----

void cmd_simulate_prior(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    with_prior(cfg, [&](const auto& prior) {
        for (int k = 0; k < cfg.realisations; ++k) {
            Rng rng(derive_seed(cfg.sampler.seed, kStreamPrior, k));
            auto os = open_out(fs::path(cfg.out_dir) / numbered("prior_", k, 3));
            write_field(os, prior.sample(cfg.dims(), rng));
        }
    });
    write_effective(cfg, "simulate-prior");
}

void cmd_synth(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const ForwardModel fm = build_forward_model(cfg);
    const std::uint64_t truth_seed = derive_seed(cfg.sampler.seed, kStreamTruth);
    const std::uint64_t data_seed = derive_seed(cfg.sampler.seed, kStreamData);
    std::optional<LfcField> truth;
    with_prior(cfg, [&](const auto& prior) {
        Rng rng(truth_seed);
        truth = prior.sample(cfg.dims(), rng);
    });
    ElasticField elastic(cfg.dims());
    const SeismicCube cube = synthesize_data(fm, *truth, data_seed, &elastic);
    {
        auto os = open_out(fs::path(cfg.out_dir) / "truth.txt");
        write_field(os, *truth);
    }
    {
        auto os = open_out(fs::path(cfg.out_dir) / "elastic.txt");
        write_elastic(os, elastic);
    }
    {
        auto os = open_out(fs::path(cfg.out_dir) / "cube.txt");
        write_cube(os, cube);
    }
    {
        auto os = open_out(fs::path(cfg.out_dir) / "manifest.txt");
        os << "master_seed = " << cfg.sampler.seed << '\n'
           << "truth_seed = " << truth_seed << '\n'
           << "data_seed = " << data_seed << '\n'
           << "elastic_stream = 1\nnoise_stream = 2\n"
           << "truth = truth.txt\nelastic = elastic.txt\ncube = cube.txt\n";
    }
    write_effective(cfg, "synth");
}

template <class Prior, class Likelihood>
std::vector<TuneRow> run_tune(const RunConfig& cfg, const Prior& prior, const Likelihood& lik, int* chosen) {
    auto [nu, rows] = tune_nu(cfg.sampler, prior, lik, cfg.dims());
    *chosen = nu;
    auto os = open_out(fs::path(cfg.out_dir) / "tune.csv");
    os << "nu,mean_acceptance\n" << std::setprecision(17);
    std::cout << "nu  mean_acceptance\n";
    for (const auto& r : rows) {
        os << r.nu << ',' << r.mean_acceptance << '\n';
        std::cout << std::setw(2) << r.nu << "  " << std::fixed << std::setprecision(4) << r.mean_acceptance << '\n';
    }
    std::cout.unsetf(std::ios::fixed);
    std::cout << "selected nu = " << nu << '\n';
    return rows;
}

void cmd_tune(RunConfig cfg) {
    fs::create_directories(cfg.out_dir);
    const ForwardModel fm = build_forward_model(cfg);
    const SeismicCube cube = load_cube(cfg);
    with_prior(cfg, [&](const auto& prior) {
        with_likelihood(fm, cube, [&](const auto& lik) {
            int nu = cfg.sampler.nu;
            run_tune(cfg, prior, lik, &nu);
            cfg.sampler.nu = nu;
        });
    });
    write_effective(cfg, "tune");
}

void cmd_invert(RunConfig cfg) {
    fs::create_directories(cfg.out_dir);
    const ForwardModel fm = build_forward_model(cfg);
    const SeismicCube cube = load_cube(cfg);
    const fs::path stream = cfg.stream_path();
    fs::create_directories(stream);
    for (const auto& e : fs::directory_iterator(stream)) {
        if (e.path().filename().string().rfind("sample_", 0) == 0) fs::remove(e.path());
    }
    with_prior(cfg, [&](const auto& prior) {
        with_likelihood(fm, cube, [&](const auto& lik) {
            if (cfg.tune) {
                int nu = cfg.sampler.nu;
                run_tune(cfg, prior, lik, &nu);
                cfg.sampler.nu = nu;
            }
            std::vector<RunDiagnostics> diags(cfg.chains);
            std::vector<std::exception_ptr> errors(cfg.chains);
            auto one_chain = [&](int c) {
                try {
                    SamplerConfig sc = cfg.sampler;
                    sc.seed = derive_seed(cfg.sampler.seed, kStreamChain, c);
                    const std::string stem = cfg.chains == 1 ? "sample_" : "sample_c" + std::to_string(c) + "_";
                    diags[c - 1] = run(sc, prior, lik, cfg.dims(), [&](long sweep, const LfcField& f) {
                        auto os = open_out(stream / numbered(stem, sweep));
                        write_field(os, f);
                    });
                } catch (...) {
                    errors[c - 1] = std::current_exception();
                }
            };
            std::vector<std::thread> pool;
            for (int c = 2; c <= cfg.chains; ++c) pool.emplace_back(one_chain, c);
            one_chain(1);
            for (auto& t : pool) t.join();
            for (const auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }

            auto tr = open_out(fs::path(cfg.out_dir) / "trace.csv");
            tr << "chain,iteration,log_prior,log_lik,acceptance\n" << std::setprecision(17);
            for (int c = 1; c <= cfg.chains; ++c) {
                for (const auto& row : diags[c - 1].trace) {
                    tr << c << ',' << row.sweep << ',' << row.log_prior << ',' << row.log_lik << ',' << row.acceptance
                       << '\n';
                }
            }
            auto dg = open_out(fs::path(cfg.out_dir) / "diagnostics.txt");
            dg << std::setprecision(6);
            dg << "prior = " << config_value(cfg, "prior") << "\nnu = " << cfg.sampler.nu
               << "\nproposal_tail = " << config_value(cfg, "proposal_tail") << "\nsweeps = " << cfg.sampler.sweeps
               << "\nburn_in = " << cfg.sampler.burn_in << "\nthin = " << cfg.sampler.thin << '\n';
            for (int c = 1; c <= cfg.chains; ++c) {
                const auto& d = diags[c - 1];
                dg << "chain " << c << ": mean_acceptance = " << d.mean_acceptance << ", geweke_z = " << d.geweke_z
                   << '\n';
                dg << "chain " << c << ": column_acceptance =";
                for (double a : d.column_acceptance) dg << ' ' << a;
                dg << '\n';
                std::cout << "chain " << c << ": mean acceptance " << d.mean_acceptance << ", Geweke z "
                          << d.geweke_z << '\n';
            }
        });
    });
    write_effective(cfg, "invert");
}

std::vector<LfcField> load_stream(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw UsageError("sample directory '" + dir.string() + "' does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("sample_", 0) == 0 && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<LfcField> out;
    for (const auto& f : files) {
        std::ifstream is(f);
        out.push_back(read_field(is));
    }
    if (out.empty()) throw UsageError("no samples in '" + dir.string() + "'");
    return out;
}

void write_map(const fs::path& dir, const std::string& stem, const MarginalMap& mm) {
    auto csv = open_out(dir / (stem + ".csv"));
    write_map_csv(csv, mm);
    auto pgm = open_out(dir / (stem + ".pgm"));
    write_map_pgm(pgm, mm);
}

void cmd_analyze(RunConfig cfg, int suggest) {
    const std::vector<LfcField> samples = load_stream(cfg.stream_path());
    if (samples.front().dims() != cfg.dims()) throw UsageError("sample lattice does not match the config lattice");
    cfg.validate_analysis();
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    const Adjacency adj = cfg.adjacency == 8 ? Adjacency::Eight : Adjacency::Four;

    const MarginalMap mm = marginal_map(samples);
    write_map(out, "marginal", mm);
    {
        auto os = open_out(out / "mode.txt");
        write_field(os, mode_map(mm));
    }
    for (int j : cfg.trace_columns) {
        auto os = open_out(out / ("trace_j" + std::to_string(j) + ".csv"));
        write_trace_csv(os, samples, j);
    }
    if (suggest > 0) {
        std::cout << "highest marginal nodes:";
        for (const Node& n : top_marginal_nodes(mm, suggest)) std::cout << ' ' << n.i << ',' << n.j;
        std::cout << '\n';
    }
    if (cfg.contact_seeds.empty()) cfg.contact_seeds = top_marginal_nodes(mm, cfg.contact_top_k);
    for (const Node& s : cfg.contact_seeds) {
        write_map(out, "contact_" + std::to_string(s.i) + "_" + std::to_string(s.j),
                  contact_probability_map(samples, s, adj));
    }
    const ConnectivityCurve curve =
        connectivity_curve(samples, derive_seed(cfg.sampler.seed, kStreamCurve), cfg.connectivity_draws, adj);
    {
        auto os = open_out(out / "connectivity_curve.csv");
        write_curve_csv(os, curve);
    }
    if (curve.skipped > 0) std::cout << curve.skipped << " samples without sand skipped in the connectivity curve\n";
    {
        auto os = open_out(out / "marginal_hist.csv");
        write_histogram_csv(os, histogram(mm.p, cfg.hist_bins));
    }
    write_effective(cfg, "analyze");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian lithology/fluid inversion on a 2-D lattice"};
    app.require_subcommand(1);
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    app.add_option("-c,--config", config_file, "key=value configuration file")->check(CLI::ExistingFile);
    app.add_option("-s,--set", overrides, "override a configuration key (key=value), repeatable");
    app.add_option("--seed", seed, "master seed");
    app.add_option("-o,--out", out_dir, "output directory");

    auto* sim = app.add_subcommand("simulate-prior", "write independent prior realisations");
    auto* synth = app.add_subcommand("synth", "draw a truth field, elastic field and seismic cube");
    auto* invert = app.add_subcommand("invert", "sample the posterior given a seismic cube");
    bool tune_flag = false;
    invert->add_flag("--tune", tune_flag, "choose nu by short preliminary runs first");
    auto* analyze = app.add_subcommand("analyze", "posterior summaries from a sample stream");
    int suggest = 0;
    analyze->add_option("--suggest-seeds", suggest, "print the K nodes with the highest marginals");
    auto* tune = app.add_subcommand("tune", "print the acceptance table over candidate nu values");
    for (auto* sub : {sim, synth, invert, analyze, tune}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = config_file.empty() ? RunConfig{} : read_config_file(config_file);
        for (const auto& o : overrides) apply_assignment(cfg, o);
        if (seed) cfg.sampler.seed = *seed;
        if (out_dir) cfg.out_dir = *out_dir;
        if (tune_flag) cfg.tune = true;
        cfg.validate();

        if (*sim) cmd_simulate_prior(cfg);
        else if (*synth) cmd_synth(cfg);
        else if (*invert) cmd_invert(cfg);
        else if (*analyze) cmd_analyze(cfg, suggest);
        else if (*tune) cmd_tune(cfg);
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
