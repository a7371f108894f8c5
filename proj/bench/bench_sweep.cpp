// Benchmark: serial reference vs OpenMP kernel of the density sweep, plus
// the hot single-field stages.
#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "essstab/certify.hpp"

using namespace essstab;

namespace {

double time_of(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    DensityOptions opt;
    opt.d = 1;
    opt.samples = argc > 1 ? std::atoi(argv[1]) : 200;
    opt.seed = 42;
    opt.pipeline.scan_sections = 32;
    opt.pipeline.t_max = 300.0;
    opt.pipeline.economize = true;

    DensityStats serial_stats, parallel_stats;
    const double t_serial = time_of([&] { serial_stats = density_experiment_serial(opt); });
    const double t_parallel = time_of([&] { parallel_stats = density_experiment(opt); });

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    std::printf("density sweep, d=%d, N=%d\n", opt.d, opt.samples);
    std::printf("  serial reference: %8.3f s\n", t_serial);
    std::printf("  openmp (%2d thr) : %8.3f s   speedup %.2fx\n", threads, t_parallel,
                t_serial / t_parallel);
    std::printf("  results identical: %s\n", serial_stats == parallel_stats ? "yes" : "NO");

    // single-field stage timings on a fixed sample
    SplitMix64 rng = SplitMix64::substream(opt.seed, 3);
    const EssField X = sample_field_in_ball(1, 1.0, rng);
    const double t_sing = time_of([&] {
        for (int k = 0; k < 50; ++k) find_all_finite_singularities(X);
    });
    const double t_cert = time_of([&] {
        for (int k = 0; k < 50; ++k) check_membership(X, opt.pipeline);
    });
    std::printf("stage timings (per call over 50 reps)\n");
    std::printf("  singularity resolution: %8.3f ms\n", t_sing * 20.0);
    std::printf("  full membership check : %8.3f ms\n", t_cert * 20.0);
    return serial_stats == parallel_stats ? 0 : 1;
}
