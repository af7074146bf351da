#include "qkdd/seeding.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace qkdd {

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_tag(std::string_view tag)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t n_samples, std::uint64_t repetition,
                          std::string_view purpose)
{
    std::uint64_t h = mix64(master);
    h = mix64(h ^ n_samples);
    h = mix64(h ^ (repetition + 0x51ed2701ULL));
    return mix64(h ^ hash_tag(purpose));
}

std::uint64_t entry_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t j)
{
    return mix64(mix64(mix64(seed) ^ i) ^ (j + 0x2545f4914f6cdd1dULL));
}

int worker_count()
{
    if (const char* env = std::getenv("QKD_THREADS")) {
        try {
            const int requested = std::stoi(env);
            if (requested > 0) return requested;
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return omp_get_max_threads();
}

}  // namespace qkdd
