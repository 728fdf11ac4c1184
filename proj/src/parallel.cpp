#include "qlab/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace qlab {

void configure_threads_from_env()
{
    if (const char* env = std::getenv("QLAB_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n > 0)
                omp_set_num_threads(n);
        } catch (...) {
            // ignore malformed values
        }
    }
}

int max_threads()
{
    return omp_get_max_threads();
}

namespace {

template <class T>
T tree_sum(std::span<const T> v)
{
    constexpr std::size_t kLeaf = 32;
    if (v.size() <= kLeaf) {
        T s{};
        for (const auto& x : v)
            s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return tree_sum(v.first(half)) + tree_sum(v.subspan(half));
}

} // namespace

double pairwise_sum(std::span<const double> v)
{
    return tree_sum(v);
}

std::complex<double> pairwise_sum(std::span<const std::complex<double>> v)
{
    return tree_sum(v);
}

} // namespace qlab
