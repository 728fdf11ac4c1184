#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace qlab {

/// Caps OpenMP parallelism from QLAB_THREADS when set. Called once by the CLI
/// and the test drivers; reductions never depend on the thread count.
void configure_threads_from_env();

int max_threads();

/// Pairwise (tree) summation in a fixed order; the result only depends on
/// the input sequence.
double pairwise_sum(std::span<const double> v);
std::complex<double> pairwise_sum(std::span<const std::complex<double>> v);

/// Kahan-compensated accumulator.
template <class T>
class KahanSum {
public:
    void add(T x)
    {
        T y = x - c_;
        T t = sum_ + y;
        c_ = (t - sum_) - y;
        sum_ = t;
    }
    T value() const { return sum_; }

private:
    T sum_{};
    T c_{};
};

} // namespace qlab
