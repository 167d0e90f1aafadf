#include "fpps/rng.hpp"

#include <array>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "fpps/errors.hpp"

namespace fpps {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::array<std::uint32_t, 4> key{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
    std::seed_seq seq(key.begin(), key.end());
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

RngStream RngStream::substream(std::uint64_t k) const {
    return RngStream(seed_, mix64(mix64(stream_id_) ^ mix64(k + 0x632be59bd9b4e019ULL)));
}

double RngStream::uniform() {
    boost::random::uniform_01<double> dist;
    return dist(engine_);
}

double RngStream::normal() {
    boost::random::normal_distribution<double> dist;
    return dist(engine_);
}

double RngStream::chi_squared(double dof) {
    if (!(dof > 0.0)) {
        throw DomainError("chi-square degrees of freedom must be positive, got " +
                          std::to_string(dof));
    }
    boost::random::chi_squared_distribution<double> dist(dof);
    return dist(engine_);
}

double RngStream::beta(double a, double b) {
    boost::random::gamma_distribution<double> ga(a);
    boost::random::gamma_distribution<double> gb(b);
    const double x = ga(engine_);
    const double y = gb(engine_);
    return x / (x + y);
}

void RngStream::fill_normal(Eigen::Ref<Eigen::MatrixXd> out) {
    boost::random::normal_distribution<double> dist;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        for (Eigen::Index r = 0; r < out.rows(); ++r) {
            out(r, c) = dist(engine_);
        }
    }
}

}  // namespace fpps
