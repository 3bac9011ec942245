// radcine: dynamic radial multi-coil MRI reconstruction workbench.
//
// Subcommands: simulate, pretrain, finetune, reconstruct, evaluate,
// adjoint-test, gradcheck, bench. Exit codes: 0 ok, 2 usage, 3 missing
// artifact, 4 format error, 5 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <thread>

#include "CLI11.hpp"
#include "radcine/baselines.hpp"
#include "radcine/bench.hpp"
#include "radcine/checkpoint.hpp"
#include "radcine/dc_cg.hpp"
#include "radcine/errors.hpp"
#include "radcine/metrics.hpp"
#include "radcine/simulation.hpp"
#include "radcine/training.hpp"
#include "radcine/unrolled.hpp"

namespace fs = std::filesystem;
using namespace radcine;

namespace {

uint64_t effective_seed(uint64_t flag_seed) {
    if (const char* env = std::getenv("RADCINE_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw CLI::ValidationError("RADCINE_SEED", "not a valid integer");
        }
    }
    return flag_seed;
}

EncodingOp op_from_dataset(const Dataset& ds) {
    return make_encoding_op(ds.traj, ds.maps, ds.dens);
}

void write_magnitude_pngs(const std::string& cine_path, const CineImage& img) {
    float peak = 0.f;
    for (const auto& v : img.data) peak = std::max(peak, std::abs(v));
    if (peak <= 0.f) peak = 1.f;
    const fs::path base(cine_path);
    const fs::path dir = base.parent_path();
    const std::string stem = base.stem().string();
    for (int t = 0; t < img.nt; ++t) {
        std::vector<uint8_t> px(static_cast<size_t>(img.nx) * img.ny);
        for (int ix = 0; ix < img.nx; ++ix)
            for (int iy = 0; iy < img.ny; ++iy)
                px[static_cast<size_t>(ix) * img.ny + iy] = static_cast<uint8_t>(
                    std::lround(255.0 * std::abs(img.at(ix, iy, t)) / peak));
        char name[64];
        std::snprintf(name, sizeof(name), "%s_f%03d.png", stem.c_str(), t);
        io::write_png_gray8((dir / name).string(), px.data(), img.ny, img.nx);
    }
}

const Sample& pick_sample(const Dataset& ds, const std::string& split, int index) {
    const std::vector<Sample>* v = nullptr;
    if (split == "train") v = &ds.train;
    else if (split == "val") v = &ds.val;
    else if (split == "test") v = &ds.test;
    else throw CLI::ValidationError("--split", "must be train|val|test");
    if (index < 0 || index >= static_cast<int>(v->size()))
        throw MissingArtifactError("sample index out of range for split " + split);
    return (*v)[static_cast<size_t>(index)];
}

int run(int argc, char** argv) {
    CLI::App app{"radcine: unrolled reconstruction for dynamic radial multi-coil MRI"};
    app.require_subcommand(1);
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    app.add_option("--threads", threads, "worker threads (1 = deterministic mode)")
        ->capture_default_str();

    // --- simulate ---
    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    int nx = 64, ny = 64, nt = 16, coils = 4, spokes = 16;
    double sigma = 0.02;
    int n_train = 20, n_val = 5, n_test = 5;
    uint64_t seed = 123;
    std::string out_dir;
    sim->add_option("--nx", nx)->capture_default_str();
    sim->add_option("--ny", ny)->capture_default_str();
    sim->add_option("--nt", nt)->capture_default_str();
    sim->add_option("--coils", coils)->capture_default_str();
    sim->add_option("--spokes-per-frame", spokes)->capture_default_str();
    sim->add_option("--sigma", sigma)->capture_default_str();
    sim->add_option("--n-train", n_train)->capture_default_str();
    sim->add_option("--n-val", n_val)->capture_default_str();
    sim->add_option("--n-test", n_test)->capture_default_str();
    sim->add_option("--seed", seed)->capture_default_str();
    sim->add_option("--out", out_dir, "output dataset directory")->required();

    // --- pretrain / finetune ---
    auto* pre = app.add_subcommand("pretrain", "stage 1: train a single CNN-block");
    std::string data_dir, ckpt_out, loss_csv, ckpt_in;
    int epochs = 10;
    double lr = 1e-4;
    int nf = 16;
    uint64_t train_seed = 1;
    pre->add_option("--data", data_dir, "dataset directory")->required();
    pre->add_option("--epochs", epochs)->capture_default_str();
    pre->add_option("--lr", lr)->capture_default_str();
    pre->add_option("--nf", nf, "initial feature maps")->capture_default_str();
    pre->add_option("--seed", train_seed)->capture_default_str();
    pre->add_option("--out", ckpt_out, "output checkpoint")->required();
    pre->add_option("--loss-csv", loss_csv, "loss log path");

    auto* fin = app.add_subcommand("finetune", "stage 2: end-to-end fine-tuning");
    int ft_m = 1, ft_ncg = 8, ft_epochs = 5;
    double ft_lr = 1e-5;
    uint64_t ft_seed = 2;
    std::string ft_data, ft_out, ft_loss_csv;
    fin->add_option("--data", ft_data, "dataset directory")->required();
    fin->add_option("--epochs", ft_epochs)->capture_default_str();
    fin->add_option("--lr", ft_lr)->capture_default_str();
    fin->add_option("--M", ft_m)->capture_default_str();
    fin->add_option("--ncg", ft_ncg)->capture_default_str();
    fin->add_option("--seed", ft_seed)->capture_default_str();
    fin->add_option("--ckpt", ckpt_in, "pretrained checkpoint")->required();
    fin->add_option("--out", ft_out, "output checkpoint")->required();
    fin->add_option("--loss-csv", ft_loss_csv, "loss log path");

    // --- reconstruct ---
    auto* rec = app.add_subcommand("reconstruct", "reconstruct one sample");
    std::string rec_data, rec_method = "proposed", rec_ckpt, rec_out, rec_split = "test",
                rec_residual_csv;
    int rec_sample = 0, rec_m = 8, rec_ncg = 4, rec_itsense_iters = 15, rec_tv_iters = 40;
    double rec_tol = 0.0, rec_tv_lambda = 0.05;
    rec->add_option("--data", rec_data, "dataset directory")->required();
    rec->add_option("--split", rec_split)->capture_default_str();
    rec->add_option("--sample", rec_sample)->capture_default_str();
    rec->add_option("--method", rec_method, "nufft|itsense|tv|proposed")->capture_default_str();
    rec->add_option("--ckpt", rec_ckpt, "checkpoint (proposed)");
    rec->add_option("--M", rec_m)->capture_default_str();
    rec->add_option("--ncg", rec_ncg)->capture_default_str();
    rec->add_option("--tol", rec_tol, "CG stopping tolerance (0 = fixed n_cg)")->capture_default_str();
    rec->add_option("--itsense-iters", rec_itsense_iters)->capture_default_str();
    rec->add_option("--tv-lambda", rec_tv_lambda)->capture_default_str();
    rec->add_option("--tv-iters", rec_tv_iters)->capture_default_str();
    rec->add_option("--residual-csv", rec_residual_csv, "CG residual trace output");
    rec->add_option("--out", rec_out, "output cine path (.bin)")->required();

    // --- evaluate ---
    auto* eval = app.add_subcommand("evaluate", "metrics between two cine files");
    std::string ev_pred, ev_gt, ev_out;
    double roi_frac = 0.5;
    eval->add_option("--pred", ev_pred)->required();
    eval->add_option("--gt", ev_gt)->required();
    eval->add_option("--roi-frac", roi_frac)->capture_default_str();
    eval->add_option("--out", ev_out, "per-frame CSV output");

    // --- diagnostics ---
    auto* adj = app.add_subcommand("adjoint-test", "operator adjoint / accuracy checks");
    uint64_t adj_seed = 11;
    adj->add_option("--seed", adj_seed)->capture_default_str();

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    uint64_t gc_seed = 13;
    gc->add_option("--seed", gc_seed)->capture_default_str();

    auto* ben = app.add_subcommand("bench", "DC forward+backward timing sweep");
    std::string bench_out = "bench.csv";
    int bench_reps = 3, bench_nt = 8, bench_nc = 4;
    ben->add_option("--out", bench_out)->capture_default_str();
    ben->add_option("--reps", bench_reps)->capture_default_str();
    ben->add_option("--nt", bench_nt)->capture_default_str();
    ben->add_option("--nc", bench_nc)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }
    set_thread_count(std::max(1, threads));

    if (*sim) {
        const uint64_t s = effective_seed(seed);
        auto traj = golden_angle_trajectory(nx, nt, spokes, 2 * std::max(nx, ny));
        auto dens = ramp_density(traj);
        auto maps = make_coil_maps(nx, ny, coils, s);
        EncodingOp op = make_encoding_op(traj, maps, dens);
        PhantomConfig proto;
        proto.nx = nx;
        proto.ny = ny;
        proto.nt = nt;
        Dataset ds = make_dataset(op, n_train, n_val, n_test, proto, sigma, s);
        save_dataset(out_dir, ds, proto);
        std::cout << "simulate: wrote " << n_train << "/" << n_val << "/" << n_test
                  << " samples to " << out_dir << " (accel " << acceleration_factor(traj) << "x)\n";
        return 0;
    }

    if (*pre) {
        Dataset ds = load_dataset(data_dir);
        UNetConfig ucfg;
        ucfg.n_f = nf;
        TrainConfig cfg;
        cfg.stage = TrainConfig::Stage::pretrain;
        cfg.epochs = epochs;
        cfg.lr = static_cast<float>(lr);
        cfg.seed = effective_seed(train_seed);
        std::vector<LossRow> log;
        ParamSet ps = pretrain(ds, ucfg, cfg, &log);
        save_checkpoint(ckpt_out, ps);
        if (!loss_csv.empty()) write_loss_csv(loss_csv, log);
        std::cout << "pretrain: " << ps.param_count() << " trainable parameters, final train loss "
                  << log.back().train_loss << "\n";
        return 0;
    }

    if (*fin) {
        Dataset ds = load_dataset(ft_data);
        ParamSet p0 = load_checkpoint(ckpt_in);
        EncodingOp op = op_from_dataset(ds);
        TrainConfig cfg;
        cfg.stage = TrainConfig::Stage::finetune;
        cfg.epochs = ft_epochs;
        cfg.lr = static_cast<float>(ft_lr);
        cfg.seed = effective_seed(ft_seed);
        cfg.m_blocks = ft_m;
        cfg.n_cg = ft_ncg;
        std::vector<LossRow> log;
        ParamSet ps = finetune(ds, op, p0, cfg, &log);
        save_checkpoint(ft_out, ps);
        if (!ft_loss_csv.empty()) write_loss_csv(ft_loss_csv, log);
        std::cout << "finetune: lambda = " << lambda_of(ps) << ", final train loss "
                  << log.back().train_loss << "\n";
        return 0;
    }

    if (*rec) {
        Dataset ds = load_dataset(rec_data);
        const Sample& sample = pick_sample(ds, rec_split, rec_sample);
        EncodingOp op = op_from_dataset(ds);
        CineImage result;
        std::vector<float> residuals;
        if (rec_method == "nufft") {
            result = apply_A_sharp(op, sample.y);
        } else if (rec_method == "itsense") {
            result = it_sense(op, sample.y, rec_itsense_iters, &residuals);
        } else if (rec_method == "tv") {
            result = tv_reconstruct(op, sample.y, static_cast<float>(rec_tv_lambda), rec_tv_iters);
        } else if (rec_method == "proposed") {
            if (rec_ckpt.empty())
                throw MissingArtifactError("reconstruct: --method proposed requires --ckpt");
            ParamSet ps = load_checkpoint(rec_ckpt);
            CgConfig cg;
            cg.n_cg = rec_ncg;
            if (rec_tol > 0) cg.tol = static_cast<float>(rec_tol);
            cg.record_residuals = !rec_residual_csv.empty();
            result = reconstruct(op, sample.y, ps, rec_m, cg, {}, &residuals);
        } else {
            throw CLI::ValidationError("--method", "must be nufft|itsense|tv|proposed");
        }
        save_cine(rec_out, result);
        write_magnitude_pngs(rec_out, result);
        if (!rec_residual_csv.empty() && !residuals.empty()) {
            std::vector<std::string> rows;
            for (size_t i = 0; i < residuals.size(); ++i)
                rows.push_back(std::to_string(i) + "," + std::to_string(residuals[i]));
            io::write_csv(rec_residual_csv, "iteration,rel_residual", rows);
        }
        std::cout << "reconstruct: method " << rec_method << " -> " << rec_out << "\n";
        return 0;
    }

    if (*eval) {
        CineImage pred = load_cine(ev_pred);
        CineImage gt = load_cine(ev_gt);
        if (pred.nx != gt.nx || pred.ny != gt.ny || pred.nt != gt.nt)
            throw FormatError("evaluate: dimension mismatch between --pred and --gt");
        std::vector<std::string> rows;
        MetricRecord mean{};
        for (int t = 0; t < pred.nt; ++t) {
            MetricRecord r = evaluate_frame(pred, gt, t, roi_frac);
            rows.push_back(std::to_string(t) + "," + std::to_string(r.psnr) + "," +
                           std::to_string(r.nrmse) + "," + std::to_string(r.ssim) + "," +
                           std::to_string(r.ms_ssim) + "," + std::to_string(r.uqi));
            mean.psnr += r.psnr;
            mean.nrmse += r.nrmse;
            mean.ssim += r.ssim;
            mean.ms_ssim += r.ms_ssim;
            mean.uqi += r.uqi;
        }
        const double n = pred.nt;
        mean.psnr /= n;
        mean.nrmse /= n;
        mean.ssim /= n;
        mean.ms_ssim /= n;
        mean.uqi /= n;
        if (!ev_out.empty()) io::write_csv(ev_out, "frame,psnr,nrmse,ssim,ms_ssim,uqi", rows);
        std::printf("%-10s %10s\n", "metric", "mean");
        std::printf("%-10s %10.4f\n", "PSNR", mean.psnr);
        std::printf("%-10s %10.4f\n", "NRMSE", mean.nrmse);
        std::printf("%-10s %10.4f\n", "SSIM", mean.ssim);
        std::printf("%-10s %10.4f\n", "MS-SSIM", mean.ms_ssim);
        std::printf("%-10s %10.4f\n", "UQI", mean.uqi);
        return 0;
    }

    if (*adj) {
        const uint64_t s = effective_seed(adj_seed);
        auto traj = golden_angle_trajectory(64, 12, 8, 128);
        auto dens = ramp_density(traj);
        auto maps = make_coil_maps(64, 64, 4, s);
        EncodingOp op = make_encoding_op(traj, maps, dens);
        std::mt19937 rng = make_rng(s, 33);
        std::uniform_real_distribution<float> d(-1.f, 1.f);
        double worst = 0;
        for (int trial = 0; trial < 20; ++trial) {
            CineImage x(64, 64, 12);
            for (auto& v : x.data) v = cfloat(d(rng), d(rng));
            KSpaceData y(op.nc, op.nt, op.samples_per_frame());
            for (auto& v : y.data) v = cfloat(d(rng), d(rng));
            KSpaceData ax = apply_A(op, x);
            CineImage aty = apply_AH(op, y);
            std::complex<double> lhs(0, 0), rhs(0, 0);
            double nax = 0, nyv = 0;
            for (size_t i = 0; i < ax.data.size(); ++i) {
                lhs += std::complex<double>(ax.data[i]) * std::conj(std::complex<double>(y.data[i]));
                nax += std::norm(std::complex<double>(ax.data[i]));
                nyv += std::norm(std::complex<double>(y.data[i]));
            }
            for (size_t i = 0; i < x.data.size(); ++i)
                rhs += std::complex<double>(x.data[i]) * std::conj(std::complex<double>(aty.data[i]));
            worst = std::max(worst, std::abs(lhs - rhs) / (std::sqrt(nax) * std::sqrt(nyv)));
        }
        std::cout << "adjoint identity: max rel err " << worst << " over 20 trials (tol 1e-4)\n";
        if (!(worst < 1e-4)) throw NumericalError("adjoint identity above tolerance");
        return 0;
    }

    if (*gc) {
        const uint64_t s = effective_seed(gc_seed);
        // tiny end-to-end configuration
        auto traj = golden_angle_trajectory(16, 8, 4, 32);
        auto dens = ramp_density(traj);
        auto maps = make_coil_maps(16, 16, 2, s);
        EncodingOp op = make_encoding_op(traj, maps, dens);
        PhantomConfig pc;
        pc.nx = pc.ny = 16;
        pc.nt = 8;
        pc.seed = s;
        CineImage gt = make_phantom(pc);
        KSpaceData y = simulate_acquisition(op, gt, 0.02, s + 1);
        UNetConfig ucfg;
        ucfg.n_f = 4;
        ParamSet ps = make_param_set(ucfg, s + 2);
        ps.set_requires_grad(true);
        CgConfig cg;
        cg.n_cg = 3;
        Tensor x0 = to_tensor(apply_A_sharp(op, y));
        Tensor ah = to_tensor(apply_AH(op, y));
        Tensor target = to_tensor(gt);
        auto build = [&]() {
            Tensor pred = reconstruct_graph(op, x0, ah, ps, 1, cg);
            return l2_loss(pred, target);
        };
        Tensor loss = build();
        backward(loss);
        // probe lambda plus a few weights with measurable finite differences
        std::mt19937 rng = make_rng(s, 44);
        double worst = 0;
        int compared = 0;
        auto probe = [&](Tensor& t, int64_t idx) {
            float* p = t.mutable_data() + idx;
            const float saved = *p;
            const double eps = 1e-3;
            NoGradGuard ng;
            *p = static_cast<float>(saved + eps);
            const double lp = build().item();
            *p = static_cast<float>(saved - eps);
            const double lm = build().item();
            *p = saved;
            if (std::abs(lp - lm) < 2e-5 * std::max(1.0, static_cast<double>(std::abs(loss.item())))) return;
            const double fd = (lp - lm) / (2 * eps);
            const double ad = t.grad()[static_cast<size_t>(idx)];
            worst = std::max(worst, std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), 1e-3}));
            ++compared;
        };
        probe(ps.lambda_raw, 0);
        for (auto& [name, t] : ps.weights) {
            std::uniform_int_distribution<int64_t> pick(0, t.numel() - 1);
            for (int i = 0; i < 2 && compared < 24; ++i) probe(t, pick(rng));
        }
        std::cout << "gradcheck: max rel err " << worst << " over " << compared
                  << " measurable probes (tol 1e-2)\n";
        if (compared < 5 || !(worst < 1e-2)) throw NumericalError("gradient check failed");
        return 0;
    }

    if (*ben) {
        BenchConfig cfg;
        cfg.reps = bench_reps;
        cfg.nt = bench_nt;
        cfg.nc = bench_nc;
        auto rows = bench_sweep(cfg);
        write_bench_csv(bench_out, rows);
        std::cout << "bench: wrote " << rows.size() << " rows to " << bench_out << "\n";
        return 0;
    }

    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
