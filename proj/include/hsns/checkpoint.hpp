/// @file checkpoint.hpp
/// @brief Binary trajectory checkpoints with a documented byte layout.
///
/// All fields are little-endian. Layout, in order:
///
///   offset  size  field
///   0       8     magic "HSNSCKP1"
///   8       8     config hash (u64)
///   16      8     trajectory seed (u64)
///   24      8     generator state (u64)
///   32      8     accepted step counter (u64)
///   40      8     time t (f64)
///   48      4     cell count N (u32)
///   52      4     retained noise modes K (u32)
///   56      8     domain length L (f64)
///   64      32    eos a, gamma, beta, rho_bar (4 x f64)
///   96      24    noise f0, q, alpha (3 x f64)
///   120     8K    Wiener coordinates W_k(t) (K x f64)
///   120+8K  8N    rho (N x f64)
///   ...     8N+8  u (N+1 x f64)
///
/// Restoring the state, time and generator state makes resumption
/// bit-exact: stepping depends on nothing else.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hsns/errors.hpp"
#include "hsns/grid.hpp"

namespace hsns {

struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::uint64_t rng_state = 0;
    std::uint64_t step_count = 0;
    double t = 0.0;
    std::uint32_t n = 0;
    std::uint32_t k = 0;
    double L = 0.0;
    double eos_a = 0.0, eos_gamma = 0.0, eos_beta = 0.0, eos_rho_bar = 0.0;
    double noise_f0 = 0.0, noise_q = 0.0, noise_alpha = 0.0;
    std::vector<double> w;    ///< size k
    std::vector<double> rho;  ///< size n
    std::vector<double> u;    ///< size n+1

    FluidState state() const {
        FluidState s;
        s.rho = rho;
        s.u = u;
        s.t = t;
        return s;
    }
};

namespace detail {

inline constexpr char kCkptMagic[8] = {'H', 'S', 'N', 'S', 'C', 'K', 'P', '1'};

template <class T>
void put(std::string& buf, T v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.append(tmp, sizeof(T));
}

template <class T>
T take(const std::string& buf, std::size_t& off) {
    if (off + sizeof(T) > buf.size()) throw NumericError("checkpoint: truncated file");
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& c) {
    std::string buf;
    buf.append(detail::kCkptMagic, 8);
    detail::put(buf, c.config_hash);
    detail::put(buf, c.seed);
    detail::put(buf, c.rng_state);
    detail::put(buf, c.step_count);
    detail::put(buf, c.t);
    detail::put(buf, c.n);
    detail::put(buf, c.k);
    detail::put(buf, c.L);
    detail::put(buf, c.eos_a);
    detail::put(buf, c.eos_gamma);
    detail::put(buf, c.eos_beta);
    detail::put(buf, c.eos_rho_bar);
    detail::put(buf, c.noise_f0);
    detail::put(buf, c.noise_q);
    detail::put(buf, c.noise_alpha);
    for (double v : c.w) detail::put(buf, v);
    for (double v : c.rho) detail::put(buf, v);
    for (double v : c.u) detail::put(buf, v);
    return buf;
}

inline void write_checkpoint(const std::string& path, const Checkpoint& c) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw NumericError(detail::msg("checkpoint: cannot write '", path, "'"));
    const std::string buf = serialize_checkpoint(c);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(detail::msg("checkpoint: cannot open '", path, "'"));
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), detail::kCkptMagic, 8) != 0)
        throw ConfigError(detail::msg("checkpoint: '", path, "' has the wrong magic"));
    std::size_t off = 8;
    Checkpoint c;
    c.config_hash = detail::take<std::uint64_t>(buf, off);
    c.seed = detail::take<std::uint64_t>(buf, off);
    c.rng_state = detail::take<std::uint64_t>(buf, off);
    c.step_count = detail::take<std::uint64_t>(buf, off);
    c.t = detail::take<double>(buf, off);
    c.n = detail::take<std::uint32_t>(buf, off);
    c.k = detail::take<std::uint32_t>(buf, off);
    c.L = detail::take<double>(buf, off);
    c.eos_a = detail::take<double>(buf, off);
    c.eos_gamma = detail::take<double>(buf, off);
    c.eos_beta = detail::take<double>(buf, off);
    c.eos_rho_bar = detail::take<double>(buf, off);
    c.noise_f0 = detail::take<double>(buf, off);
    c.noise_q = detail::take<double>(buf, off);
    c.noise_alpha = detail::take<double>(buf, off);
    c.w.resize(c.k);
    for (auto& v : c.w) v = detail::take<double>(buf, off);
    c.rho.resize(c.n);
    for (auto& v : c.rho) v = detail::take<double>(buf, off);
    c.u.resize(static_cast<std::size_t>(c.n) + 1);
    for (auto& v : c.u) v = detail::take<double>(buf, off);
    if (off != buf.size())
        throw ConfigError(detail::msg("checkpoint: '", path, "' has trailing bytes"));
    return c;
}

}  // namespace hsns
