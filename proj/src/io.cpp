#include "hwp/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "hwp/errors.hpp"

namespace hwp {

namespace {

std::ofstream open_out(const std::string& file, std::ios::openmode mode = std::ios::out) {
    std::ofstream os(file, mode);
    if (!os) throw ConfigError("cannot open '" + file + "' for writing");
    if (!(mode & std::ios::binary)) os.precision(17);
    return os;
}

std::ifstream open_in(const std::string& file, std::ios::openmode mode = std::ios::in) {
    std::ifstream is(file, mode);
    if (!is) throw ConfigError("cannot open '" + file + "'");
    return is;
}

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
}

template <class T>
void put(std::ostream& os, T v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("truncated binary field");
    return to_little(v);
}

}  // namespace

void write_trajectory_csv(const TrajectoryPath& path, const std::string& file) {
    auto os = open_out(file);
    const bool mod = path.S_mod.has_value();
    os << "t,x,xi,S" << (mod ? ",S_mod" : "") << "\n";
    for (std::size_t i = 0; i < path.size(); ++i) {
        os << path.times[i] << "," << path.x[i] << "," << path.xi[i] << "," << (path.S.empty() ? 0.0 : path.S[i]);
        if (mod) os << "," << (*path.S_mod)[i];
        os << "\n";
    }
}

void write_field_csv(const Field& f, const std::string& file) {
    auto os = open_out(file);
    os << "y,re,im\n";
    for (std::size_t j = 0; j < f.grid.n(); ++j)
        os << f.grid.point(j) << "," << f[j].real() << "," << f[j].imag() << "\n";
}

Field read_field_csv(const std::string& file) {
    auto is = open_in(file);
    std::string line;
    std::getline(is, line);
    std::vector<double> y;
    std::vector<cplx> v;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        try {
            y.push_back(std::stod(a));
            v.emplace_back(std::stod(b), std::stod(c));
        } catch (const std::exception&) {
            throw ConfigError("malformed field row '" + line + "' in " + file);
        }
    }
    if (y.size() < 2) throw ConfigError("field file " + file + " has too few rows");
    Field f(Grid1D(y.size(), -y.front()));
    if (std::abs(f.grid.point(1) - y[1]) > 1e-9 * std::max(1.0, std::abs(y[1])))
        throw ConfigError("field file " + file + " is not on a grid [-L, L) with n points");
    f.values = std::move(v);
    return f;
}

void write_field_binary(const Field& f, double t, const std::string& file) {
    auto os = open_out(file, std::ios::out | std::ios::binary);
    put<std::uint64_t>(os, f.grid.n());
    put<double>(os, f.grid.half_width());
    put<double>(os, t);
    for (const auto& z : f.values) {
        put<double>(os, z.real());
        put<double>(os, z.imag());
    }
}

std::pair<Field, double> read_field_binary(const std::string& file) {
    auto is = open_in(file, std::ios::in | std::ios::binary);
    const auto n = get<std::uint64_t>(is);
    const double L = get<double>(is);
    const double t = get<double>(is);
    Field f(Grid1D(static_cast<std::size_t>(n), L));
    for (auto& z : f.values) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        z = {re, im};
    }
    return {std::move(f), t};
}

void write_envelope_diagnostics(const EnvelopeRun& run, const std::string& file) {
    auto os = open_out(file);
    os << "t,mass,sigma1,sigma2,sigma3,sigma4,G,theta\n";
    for (std::size_t s = 0; s < run.times.size(); ++s) {
        const double t = run.times[s];
        const auto i = static_cast<std::size_t>(std::llround(t / run.dt));
        const std::size_t k = std::min(i, run.step_times.size() - 1);
        os << t << "," << run.mass[k];
        for (int order = 1; order <= 4; ++order) {
            os << ",";
            if (s < run.sigma.size()) os << run.sigma[s][static_cast<std::size_t>(order)];
            else os << "nan";
        }
        os << "," << (k < run.moment_G.size() ? run.moment_G[k] : 0.0) << ","
           << (k < run.gauge_theta.size() ? run.gauge_theta[k] : 0.0) << "\n";
    }
}

void write_direct_diagnostics(const DirectRun& run, const std::string& file) {
    auto os = open_out(file);
    os << "t,mass\n";
    for (std::size_t i = 0; i < run.step_times.size(); ++i) os << run.step_times[i] << "," << run.mass[i] << "\n";
}

void write_text(const std::string& file, const std::string& text) {
    auto os = open_out(file);
    os << text;
}

}  // namespace hwp
