// Temporary tuning harness; not part of the deliverable.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "apkr/attention_kernel.hpp"
#include "apkr/oracle.hpp"
#include "apkr/errors.hpp"
#include "apkr/rng.hpp"

using namespace apkr;

static DenseMatrix unit_rows(Index n, Index d, std::uint64_t seed) {
    CounterRng rng(seed);
    DenseMatrix a(n, d);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) a(i, j) = rng.next_gaussian();
        a.row(i) /= a.row(i).norm();
    }
    return a;
}

int main(int argc, char** argv) {
    std::string mode = argc > 1 ? argv[1] : "sandwich";
    int seeds = argc > 2 ? std::atoi(argv[2]) : 20;
    double cap = argc > 3 ? std::atof(argv[3]) : 16.0;
    double cm = argc > 4 ? std::atof(argv[4]) : 4.0;
    Config cfg;
    cfg.block_row_cap = cap;
    cfg.c_m = cm;


    if (mode == "blocks") {
        const Index n = 64, d = 8;
        DenseMatrix a = unit_rows(n, d, 42);
        KernelFactor f = build_kernel_factor(a, 0.025, 0.05, 7, std::nullopt, cfg);
        DenseMatrix dots = a * a.transpose();
        DenseMatrix gram_l = DenseMatrix::Ones(n, n);
        double fact = 1.0;
        std::printf("l   m_l     |gram_l|/l!   block err   rel\n");
        for (int l = 0; l <= f.degree; ++l) {
            if (l > 0) { gram_l = gram_l.cwiseProduct(dots); fact *= l; }
            DenseMatrix target = gram_l / fact;
            const DenseMatrix& z = f.blocks[l];
            DenseMatrix approx = z.transpose() * z;
            double tn = spectrum(target).sigma_max;
            double en = spectrum(DenseMatrix(approx - target)).sigma_max;
            std::printf("%-3d %-7lld %-13.4g %-11.4g %-8.3g\n", l,
                        (long long)f.block_rows[l], tn, en, en / tn);
        }
        return 0;
    }
    if (mode == "sandwich") {
        const Index n = 32, d = 4;
        const double eps = 0.5;
        int pass = 0;
        double total_time = 0, mtot = 0;
        for (int t = 0; t < seeds; ++t) {
            DenseMatrix a = unit_rows(n, d, 1000 + t);
            DenseMatrix k = exact_attention_kernel(a);
            auto t0 = std::chrono::steady_clock::now();
            KernelFactor f = build_kernel_factor(a, eps, 0.05, 5000 + t, std::nullopt, cfg);
            total_time += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            mtot += f.total_rows;
            if (spectral_sandwich(k, f.gram(), eps)) ++pass;
        }
        std::printf("sandwich n=32 d=4 eps=0.5: pass %d/%d  avg_m=%.0f avg_build=%.3fs (cap=%g cm=%g)\n",
                    pass, seeds, mtot / seeds, total_time / seeds, cap, cm);
    } else if (mode == "end2end") {
        const Index n = 64, d = 8;
        const double eps = 0.1;
        int pass = 0;
        double worst = 0, total_time = 0, mtot = 0;
        for (int t = 0; t < seeds; ++t) {
            DenseMatrix a = unit_rows(n, d, 2000 + t);
            CounterRng rng(3000 + t);
            Vector b(n);
            for (Index i = 0; i < n; ++i) b[i] = rng.next_gaussian();
            b.normalize();
            auto t0 = std::chrono::steady_clock::now();
            SolveReport rep;
            try {
                rep = attention_kernel_regression(a, b, eps, 0.05, 4000 + t, cfg);
            } catch (const Error& e) {
                std::printf("seed %d: %s\n", t, e.what());
                continue;
            }
            total_time += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            double res = rep.true_kernel_residual;
            worst = std::max(worst, res);
            if (res <= eps) ++pass;
        }
        std::printf("end2end n=64 d=8 eps=0.1: pass %d/%d worst=%.4f avg_time=%.3fs (cap=%g cm=%g)\n",
                    pass, seeds, worst, total_time / seeds, cap, cm);
    } else if (mode == "single") {
        const Index n = 64, d = 8;
        DenseMatrix a = unit_rows(n, d, 42);
        KernelFactor f = build_kernel_factor(a, 0.025, 0.05, 7, std::nullopt, cfg);
        std::printf("q=%d m=%lld blocks:", f.degree, (long long)f.total_rows);
        for (std::size_t i = 0; i < f.block_rows.size(); ++i)
            std::printf(" %lld", (long long)f.block_rows[i]);
        std::printf("\n");
        DenseMatrix k = exact_attention_kernel(a);
        SpectrumInfo si = spectrum(k);
        std::printf("kernel kappa=%.3g lmin=%.3g lmax=%.3g\n", si.kappa,
                    si.sigma_min, si.sigma_max);
    }
    return 0;
}
// appended: per-block error probe invoked via mode "blocks"
