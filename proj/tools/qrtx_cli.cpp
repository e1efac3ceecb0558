// Command-line front end: decomposition, reconstruction, the variational
// solver, the forward network, fidelity metrics, the reflectance consistency
// sweep, gradient verification and the ablation harness.
//
// Exit codes: 0 success, 1 usage error, 2 I/O or format error, 3 numerical
// failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qrtx/config.hpp"
#include "qrtx/decompose.hpp"
#include "qrtx/gradcheck.hpp"
#include "qrtx/metrics.hpp"
#include "qrtx/network.hpp"
#include "qrtx/png_io.hpp"
#include "qrtx/qrtx_format.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

qrtx::RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return qrtx::RunConfig{};
    return qrtx::load_run_config(path);
}

qrtx::Matrix real_plane(const qrtx::QuaternionField& f) {
    qrtx::Matrix m(f.height, f.width);
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c) m.at(r, c) = f.at(r, c).w;
    return m;
}

void write_field_artifacts(const qrtx::QuaternionField& f, const fs::path& dir, const std::string& stem) {
    qrtx::save_qrtx(f, (dir / (stem + ".qrtx")).string());
    qrtx::save_png(qrtx::extract_rgb(f), (dir / (stem + ".png")).string());
    qrtx::save_png_gray(real_plane(f), (dir / (stem + "_real.png")).string());
}

qrtx::QuaternionField planes_to_field(const qrtx::RgbImage& img) { return qrtx::embed_rgb(img); }

// JSON value for PSNR; infinity prints as the string "inf"
json psnr_json(double v) {
    if (std::isinf(v)) return json("inf");
    return json(v);
}

void write_trace_csv(const std::vector<qrtx::LossBreakdown>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw qrtx::QrtxError("cannot open for writing: " + path);
    out << "iteration,recon_low,recon_high,mutual_low,mutual_high,smooth,equal_r,freq,total\n";
    out.precision(17);
    for (size_t i = 0; i < trace.size(); ++i) {
        const qrtx::LossBreakdown& b = trace[i];
        out << i << ',' << b.recon_low << ',' << b.recon_high << ',' << b.mutual_low << ','
            << b.mutual_high << ',' << b.smooth << ',' << b.equal_r << ',' << b.freq << ',' << b.total
            << '\n';
    }
}

std::vector<qrtx::Matrix> quaternion_reflectance_planes(const qrtx::QuaternionField& f) {
    std::vector<qrtx::Matrix> planes(4, qrtx::Matrix(f.height, f.width));
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c) {
            const qrtx::Quaternion& q = f.at(r, c);
            planes[0].at(r, c) = q.w;
            planes[1].at(r, c) = q.x;
            planes[2].at(r, c) = q.y;
            planes[3].at(r, c) = q.z;
        }
    return planes;
}

qrtx::ReflectanceDecomposer make_decomposer(const std::string& mode, const qrtx::RunConfig& cfg) {
    if (mode == "exact" || mode == "paper-init") {
        const double eps = cfg.solver.epsilon_black;
        return [eps](const qrtx::RgbImage& img) {
            return quaternion_reflectance_planes(qrtx::init_reflectance(img, eps));
        };
    }
    if (mode == "network") {
        const qrtx::NetworkWeights weights = qrtx::NetworkWeights::randomized(cfg.network, cfg.network_seed);
        const double eps = cfg.solver.epsilon_black;
        const bool ca = cfg.solver.use_cross_attention;
        return [weights, eps, ca](const qrtx::RgbImage& img) {
            return quaternion_reflectance_planes(qrtx::network_forward(img, weights, ca, eps).q_r);
        };
    }
    if (mode == "ssr") {
        const double sigma = cfg.ssr_sigma;
        const double log_eps = cfg.ssr_log_epsilon;
        return [sigma, log_eps](const qrtx::RgbImage& img) {
            qrtx::SsrResult res = qrtx::ssr_baseline(img, sigma, log_eps);
            return std::vector<qrtx::Matrix>{res.reflectance.r, res.reflectance.g, res.reflectance.b};
        };
    }
    throw UsageError("unknown decomposer mode: " + mode);
}

int cmd_decompose(const std::string& in, const std::string& mode, const std::string& out_dir,
                  const std::string& config_path, uint64_t seed, bool seed_given) {
    qrtx::RunConfig cfg = load_config_or_default(config_path);
    if (seed_given) cfg.network_seed = seed;
    const qrtx::RgbImage img = qrtx::load_png(in);
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    qrtx::DecompositionPair pair;
    if (mode == "paper-init") {
        pair.q_r = qrtx::init_reflectance(img, cfg.solver.epsilon_black);
        pair.q_i = qrtx::init_illumination(img);
    } else if (mode == "exact") {
        pair = qrtx::analytic_exact_init(img, cfg.solver.epsilon_black);
    } else if (mode == "network") {
        if (img.height > 128 || img.width > 128)
            throw UsageError("network mode accepts inputs up to 128x128");
        qrtx::NetworkWeights weights = qrtx::NetworkWeights::randomized(cfg.network, cfg.network_seed);
        pair = qrtx::network_forward(img, weights, cfg.solver.use_cross_attention,
                                     cfg.solver.epsilon_black);
    } else if (mode == "ssr") {
        qrtx::SsrResult res = qrtx::ssr_baseline(img, cfg.ssr_sigma, cfg.ssr_log_epsilon);
        pair.q_r = planes_to_field(res.reflectance);
        pair.q_i = planes_to_field(res.illumination);
    } else {
        throw UsageError("unknown mode: " + mode);
    }

    write_field_artifacts(pair.q_r, dir, "R");
    write_field_artifacts(pair.q_i, dir, "I");
    std::cout << "wrote R.qrtx I.qrtx R.png I.png (and *_real.png) to " << dir.string() << "\n";
    return kExitOk;
}

int cmd_reconstruct(const std::string& r_path, const std::string& i_path, const std::string& out) {
    qrtx::DecompositionPair pair{qrtx::load_qrtx(r_path), qrtx::load_qrtx(i_path)};
    qrtx::ReconResult res = qrtx::reconstruct(pair);
    qrtx::RgbImage display = res.image;
    for (int c = 0; c < 3; ++c)
        for (double& v : display.plane(c).data) v = std::clamp(v, 0.0, 1.0);
    qrtx::save_png(display, out);

    double recon_max = 0.0, input_norm = 0.0;
    for (int c = 0; c < 3; ++c)
        for (double v : res.image.plane(c).data) recon_max = std::max(recon_max, std::abs(v));
    for (const qrtx::Quaternion& q : pair.q_r.data) input_norm = std::max(input_norm, qrtx::norm(q));

    std::printf("mean-abs real residue: %.6e\n", res.mean_abs_real);
    std::printf("max-abs real residue: %.6e\n", res.max_abs_real);
    if (recon_max <= 1e-9 && input_norm > 1e-9)
        std::printf(
            "warning: reconstruction is identically zero. The reflectance and illumination fields are "
            "parallel pure-imaginary quaternions, so their Hamilton product has no imaginary part; this is "
            "the documented degeneracy of the paper-init pairing (normalized ratios times raw "
            "magnitudes). Use --mode exact for a reconstructing factorization.\n");
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int cmd_solve(const std::string& low, const std::string& high, const std::string& config_path,
              const std::string& out_dir, const std::string& trace_path, int iters_override) {
    qrtx::RunConfig cfg = load_config_or_default(config_path);
    if (iters_override > 0) cfg.solver.max_iters = iters_override;
    const qrtx::RgbImage s_low = qrtx::load_png(low);
    const qrtx::RgbImage s_high = qrtx::load_png(high);
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    qrtx::SolveResult res = qrtx::variational_decompose(s_low, s_high, cfg.solver);
    write_trace_csv(res.trace, trace_path.empty() ? (dir / "trace.csv").string() : trace_path);
    write_field_artifacts(res.low.q_r, dir, "R_low");
    write_field_artifacts(res.low.q_i, dir, "I_low");
    write_field_artifacts(res.high.q_r, dir, "R_high");
    write_field_artifacts(res.high.q_i, dir, "I_high");

    const qrtx::RgbImage recon_low = qrtx::reconstruct(res.low).image;
    const qrtx::RgbImage recon_high = qrtx::reconstruct(res.high).image;
    std::printf("iterations: %d\n", res.iterations);
    std::printf("best total loss: %.9e\n", res.best_total);
    std::printf("psnr low: %.3f dB, psnr high: %.3f dB\n", qrtx::psnr(recon_low, s_low),
                qrtx::psnr(recon_high, s_high));
    if (res.diverged) {
        std::fprintf(stderr, "error: loss became non-finite; returning the last finite state\n");
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_forward(const std::string& in, uint64_t seed, const std::string& config_path,
                const std::string& out_dir) {
    qrtx::RunConfig cfg = load_config_or_default(config_path);
    cfg.network_seed = seed;
    const qrtx::RgbImage img = qrtx::load_png(in);
    if (img.height > 128 || img.width > 128)
        throw UsageError("forward accepts inputs up to 128x128 (attention cost grows with (H*W)^2)");
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    qrtx::NetworkWeights weights = qrtx::NetworkWeights::randomized(cfg.network, cfg.network_seed);
    qrtx::DecompositionPair pair =
        qrtx::network_forward(img, weights, cfg.solver.use_cross_attention, cfg.solver.epsilon_black);
    write_field_artifacts(pair.q_r, dir, "R");
    write_field_artifacts(pair.q_i, dir, "I");
    std::cout << "wrote forward-pass fields to " << dir.string() << "\n";
    return kExitOk;
}

int cmd_rci(const std::string& low, const std::string& high, const std::string& mode,
            const std::string& config_path, const std::string& out_json, const std::string& var_png) {
    qrtx::RunConfig cfg = load_config_or_default(config_path);
    const qrtx::RgbImage s_low = qrtx::load_png(low);
    const qrtx::RgbImage s_high = qrtx::load_png(high);

    qrtx::ReflectanceDecomposer dec = make_decomposer(mode, cfg);
    qrtx::RciReport report = qrtx::rci(dec, s_low, s_high, cfg.alphas);

    json j;
    j["alphas"] = report.alphas;
    j["components"] = report.variance_map.size();
    j["sup_variance"] = report.sup_variance;
    j["rci"] = report.rci;
    const std::string text = j.dump(2);
    if (out_json.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream out(out_json);
        if (!out) throw qrtx::QrtxError("cannot open for writing: " + out_json);
        out << text << "\n";
        std::cout << "wrote " << out_json << "\n";
    }

    if (!var_png.empty()) {
        // per-pixel maximum over components, scaled by the 0.25 bound
        qrtx::Matrix vis(s_low.height, s_low.width);
        for (const qrtx::Matrix& m : report.variance_map)
            for (size_t i = 0; i < m.size(); ++i) vis.data[i] = std::max(vis.data[i], m.data[i] / 0.25);
        qrtx::save_png_gray(vis, var_png);
    }
    return kExitOk;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path) {
    const qrtx::RgbImage a = qrtx::load_png(a_path);
    const qrtx::RgbImage b = qrtx::load_png(b_path);
    json j;
    j["mse"] = qrtx::mse(a, b);
    j["psnr"] = psnr_json(qrtx::psnr(a, b));
    j["ssim"] = qrtx::ssim(a, b);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_gradcheck(uint64_t seed, int dims, double tolerance) {
    qrtx::GradCheckReport report = qrtx::grad_check(dims, dims, seed, tolerance);
    std::printf("%-12s %14s %9s %9s %6s\n", "term", "max_rel_err", "checked", "skipped", "pass");
    for (const qrtx::TermCheck& t : report.terms)
        std::printf("%-12s %14.6e %9d %9d %6s\n", t.name.c_str(), t.max_rel_err, t.checked, t.skipped,
                    t.pass ? "yes" : "NO");
    std::printf("freq term vs direct DFT: value %.3e, gradient %.3e\n", report.freq_value_vs_oracle,
                report.freq_gradient_vs_oracle);
    if (!report.pass) {
        std::fprintf(stderr, "error: gradient check failed\n");
        return kExitNumeric;
    }
    std::printf("all gradient checks passed\n");
    return kExitOk;
}

int cmd_ablate(const std::string& low, const std::string& high, const std::string& config_path,
               int iters_override, const std::string& out_csv) {
    qrtx::RunConfig cfg = load_config_or_default(config_path);
    if (iters_override > 0) cfg.solver.max_iters = iters_override;
    const qrtx::RgbImage s_low = qrtx::load_png(low);
    const qrtx::RgbImage s_high = qrtx::load_png(high);

    struct Row {
        const char* name;
        bool wt, ca, fr;
    };
    const Row rows[4] = {{"Baseline", false, false, false},
                         {"+WT", true, false, false},
                         {"+WT+CA", true, true, false},
                         {"+WT+CA+FR", true, true, true}};

    std::printf("%-10s %3s %3s %3s %12s %12s %8s %8s %10s %10s %14s\n", "variant", "WT", "CA", "FR",
                "psnr_low", "psnr_high", "ssim_low", "ssim_high", "mse_low", "mse_high", "final_total");
    std::ofstream csv;
    if (!out_csv.empty()) {
        csv.open(out_csv);
        if (!csv) throw qrtx::QrtxError("cannot open for writing: " + out_csv);
        csv << "variant,wt,ca,fr,psnr_low,psnr_high,ssim_low,ssim_high,mse_low,mse_high,final_total\n";
        csv.precision(12);
    }

    bool any_diverged = false;
    for (const Row& row : rows) {
        qrtx::SolverConfig sc = cfg.solver;
        sc.use_wavelet_domain = row.wt;
        sc.use_cross_attention = row.ca;
        sc.use_freq_reg = row.fr;
        qrtx::SolveResult res = qrtx::variational_decompose(s_low, s_high, sc);
        any_diverged = any_diverged || res.diverged;

        const qrtx::RgbImage recon_low = qrtx::reconstruct(res.low).image;
        const qrtx::RgbImage recon_high = qrtx::reconstruct(res.high).image;
        const double pl = qrtx::psnr(recon_low, s_low), ph = qrtx::psnr(recon_high, s_high);
        const double sl = qrtx::ssim(recon_low, s_low), sh = qrtx::ssim(recon_high, s_high);
        const double ml = qrtx::mse(recon_low, s_low), mh = qrtx::mse(recon_high, s_high);
        std::printf("%-10s %3s %3s %3s %12.3f %12.3f %8.4f %8.4f %10.3e %10.3e %14.6e\n", row.name,
                    row.wt ? "on" : "off", row.ca ? "on" : "off", row.fr ? "on" : "off", pl, ph, sl, sh,
                    ml, mh, res.best_total);
        if (csv.is_open())
            csv << row.name << ',' << row.wt << ',' << row.ca << ',' << row.fr << ',' << pl << ',' << ph
                << ',' << sl << ',' << sh << ',' << ml << ',' << mh << ',' << res.best_total << '\n';
    }
    if (any_diverged) {
        std::fprintf(stderr, "error: a variant diverged to a non-finite loss\n");
        return kExitNumeric;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quaternion reflectance/illumination decomposition toolkit"};
    app.require_subcommand(1);

    std::string in, low, high, mode = "exact", out_dir = ".", config_path, out_path, trace_path;
    std::string r_path, i_path, a_path, b_path, var_png;
    uint64_t seed = 0;
    int dims = 8, iters = 0;
    double tolerance = 1e-4;
    bool seed_given = false;

    CLI::App* decompose = app.add_subcommand("decompose", "factor an image into R.qrtx / I.qrtx");
    decompose->add_option("--in", in, "input PNG")->required();
    decompose->add_option("--mode", mode, "paper-init | exact | network | ssr");
    decompose->add_option("--out-dir", out_dir, "output directory");
    decompose->add_option("--config", config_path, "JSON run configuration");
    decompose->add_option("--seed", seed, "network weight seed")->each([&](const std::string&) {
        seed_given = true;
    });

    CLI::App* reconstruct_cmd = app.add_subcommand("reconstruct", "Hamilton product of two fields");
    reconstruct_cmd->add_option("--r", r_path, "reflectance .qrtx")->required();
    reconstruct_cmd->add_option("--i", i_path, "illumination .qrtx")->required();
    reconstruct_cmd->add_option("--out", out_path, "output PNG")->default_val("recon.png");

    CLI::App* solve = app.add_subcommand("solve", "variational decomposition of a low/high pair");
    solve->add_option("--low", low, "low-light PNG")->required();
    solve->add_option("--high", high, "normal-light PNG")->required();
    solve->add_option("--config", config_path, "JSON run configuration");
    solve->add_option("--out-dir", out_dir, "output directory");
    solve->add_option("--trace", trace_path, "loss trace CSV path");
    solve->add_option("--iters", iters, "override max iterations");

    CLI::App* forward = app.add_subcommand("forward", "one forward pass of the decomposition network");
    forward->add_option("--in", in, "input PNG (up to 128x128)")->required();
    forward->add_option("--seed", seed, "weight seed");
    forward->add_option("--config", config_path, "JSON run configuration");
    forward->add_option("--out-dir", out_dir, "output directory");

    CLI::App* rci_cmd = app.add_subcommand("rci", "reflectance consistency across an illumination sweep");
    rci_cmd->add_option("--low", low, "low-light PNG")->required();
    rci_cmd->add_option("--high", high, "normal-light PNG")->required();
    rci_cmd->add_option("--mode", mode, "exact | paper-init | network | ssr");
    rci_cmd->add_option("--config", config_path, "JSON run configuration");
    rci_cmd->add_option("--out", out_path, "report JSON path (stdout when omitted)");
    rci_cmd->add_option("--var-png", var_png, "variance map PNG path");

    CLI::App* metrics_cmd = app.add_subcommand("metrics", "mse / psnr / ssim of two images");
    metrics_cmd->add_option("--a", a_path, "first PNG")->required();
    metrics_cmd->add_option("--b", b_path, "second PNG")->required();

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gradcheck->add_option("--seed", seed, "random state seed");
    gradcheck->add_option("--dims", dims, "grid size (<= 16)");
    gradcheck->add_option("--tolerance", tolerance, "relative error tolerance");

    CLI::App* ablate = app.add_subcommand("ablate", "solve under the four WT/CA/FR flag rows");
    ablate->add_option("--low", low, "low-light PNG")->required();
    ablate->add_option("--high", high, "normal-light PNG")->required();
    ablate->add_option("--config", config_path, "JSON run configuration");
    ablate->add_option("--iters", iters, "override max iterations");
    ablate->add_option("--out", out_path, "comparison table CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (decompose->parsed()) return cmd_decompose(in, mode, out_dir, config_path, seed, seed_given);
        if (reconstruct_cmd->parsed()) return cmd_reconstruct(r_path, i_path, out_path);
        if (solve->parsed()) return cmd_solve(low, high, config_path, out_dir, trace_path, iters);
        if (forward->parsed()) return cmd_forward(in, seed, config_path, out_dir);
        if (rci_cmd->parsed()) return cmd_rci(low, high, mode, config_path, out_path, var_png);
        if (metrics_cmd->parsed()) return cmd_metrics(a_path, b_path);
        if (gradcheck->parsed()) return cmd_gradcheck(seed, dims, tolerance);
        if (ablate->parsed()) return cmd_ablate(low, high, config_path, iters, out_path);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitUsage;
}
