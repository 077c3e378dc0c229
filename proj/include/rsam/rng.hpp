#pragma once

#include <cstdint>
#include <random>

namespace rsam {

// Deterministic per-(seed, path, substream) random stream. Each simulated
// path owns independent substreams for its Brownian and jump draws, so
// adding jump atoms never perturbs the Brownian increments of a shared seed.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t path, std::uint64_t substream);

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }
    double exponential(double rate) {
        return std::exponential_distribution<double>(rate)(eng_);
    }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace rsam
