#include "hwp/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "hwp/errors.hpp"

namespace hwp {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// FFTW's planner is not reentrant; execution of an existing plan on new
// arrays is. Plans are created once per (length, direction) and kept.
class PlanCache {
public:
    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [key, p] : plans_) fftw_destroy_plan(p);
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

void execute(std::span<cplx> data, int sign) {
    fftw_plan p = plan_cache().get(data.size(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(p, buf, buf);
}

// (i k)^order applied in Fourier space.
Field spectral_derivative(const Field& f, int order) {
    Field out = f;
    if (order == 0) return out;
    fft_forward(out.values);
    const auto& k = f.grid.wavenumbers();
    const std::size_t n = f.size();
    for (std::size_t j = 0; j < n; ++j) out[j] *= std::pow(cplx(0.0, k[j]), order);
    if (order % 2 == 1) out[n / 2] = 0.0;
    fft_inverse(out.values);
    return out;
}

}  // namespace

Grid1D::Grid1D(std::size_t n, double half_width) : n_(n), half_width_(half_width) {
    if (n < 16 || !is_power_of_two(n))
        throw ConfigError("grid size must be a power of two >= 16, got " + std::to_string(n));
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw ConfigError("grid half width must be positive");
    h_ = 2.0 * half_width / static_cast<double>(n);
    k_.resize(n);
    const double dk = std::numbers::pi / half_width;
    for (std::size_t j = 0; j < n; ++j) {
        const auto m = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
        k_[j] = m * dk;
    }
}

std::vector<double> Grid1D::points() const {
    std::vector<double> y(n_);
    for (std::size_t j = 0; j < n_; ++j) y[j] = point(j);
    return y;
}

Field::Field(Grid1D g, std::vector<cplx> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.n()) throw ConfigError("field length does not match grid");
}

Field Field::from_function(const Grid1D& g, const std::function<cplx(double)>& f) {
    Field out(g);
    for (std::size_t j = 0; j < g.n(); ++j) out[j] = f(g.point(j));
    return out;
}

bool Field::finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

Field& Field::operator+=(const Field& o) {
    if (!(grid == o.grid)) throw ConfigError("field grids differ");
    for (std::size_t j = 0; j < size(); ++j) values[j] += o.values[j];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    if (!(grid == o.grid)) throw ConfigError("field grids differ");
    for (std::size_t j = 0; j < size(); ++j) values[j] -= o.values[j];
    return *this;
}

Field& Field::operator*=(cplx s) {
    for (auto& v : values) v *= s;
    return *this;
}

Field operator-(Field a, const Field& b) { return a -= b; }
Field operator+(Field a, const Field& b) { return a += b; }
Field operator*(cplx s, Field a) { return a *= s; }

void fft_forward(std::span<cplx> data) { execute(data, FFTW_FORWARD); }

void fft_inverse(std::span<cplx> data) {
    execute(data, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& z : data) z *= scale;
}

Field derivative(const Field& f, int order) {
    if (order != 1 && order != 2) throw ConfigError("derivative order must be 1 or 2");
    return spectral_derivative(f, order);
}

double l2_norm_sq(const Field& f) {
    double s = 0.0;
    for (const auto& z : f.values) s += std::norm(z);
    return s * f.grid.spacing();
}

double l2_norm(const Field& f) { return std::sqrt(l2_norm_sq(f)); }

double l2_distance(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw ConfigError("field grids differ");
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - b[j]);
    return std::sqrt(s * a.grid.spacing());
}

double sigma_norm(const Field& f, int k) {
    const auto y = f.grid.points();
    double total = 0.0;
    for (int b = 0; b <= k; ++b) {
        const Field d = spectral_derivative(f, b);
        for (int a = 0; a + b <= k; ++a) {
            double s = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) s += std::norm(std::pow(y[j], a) * d[j]);
            total += std::sqrt(s * f.grid.spacing());
        }
    }
    return total;
}

GridNorms grid_norms(const Field& f, int max_order) {
    GridNorms out;
    out.l2 = l2_norm(f);
    const auto y = f.grid.points();
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += std::norm(y[j] * f[j]);
    out.l2_of_y_times_f = std::sqrt(s * f.grid.spacing());
    out.l2_of_grad_f = l2_norm(spectral_derivative(f, 1));

    // ||y^a d^b f|| table, reused across sigma_k
    std::vector<std::vector<double>> table(max_order + 1, std::vector<double>(max_order + 1, 0.0));
    for (int b = 0; b <= max_order; ++b) {
        const Field d = spectral_derivative(f, b);
        for (int a = 0; a + b <= max_order; ++a) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d.size(); ++j) acc += std::norm(std::pow(y[j], a) * d[j]);
            table[a][b] = std::sqrt(acc * f.grid.spacing());
        }
    }
    out.sigma.assign(max_order + 1, 0.0);
    for (int k = 0; k <= max_order; ++k)
        for (int a = 0; a <= k; ++a)
            for (int b = 0; a + b <= k; ++b) out.sigma[k] += table[a][b];
    return out;
}

double first_moment(const Field& f) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += f.grid.point(j) * std::norm(f[j]);
    return s * f.grid.spacing();
}

double second_moment(const Field& f) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double y = f.grid.point(j);
        s += y * y * std::norm(f[j]);
    }
    return s * f.grid.spacing();
}

double edge_mass_fraction(const Field& f, std::size_t margin) {
    const std::size_t n = f.size();
    margin = std::min(margin, n / 2);
    double edge = 0.0;
    for (std::size_t j = 0; j < margin; ++j) edge += std::norm(f[j]) + std::norm(f[n - 1 - j]);
    double total = 0.0;
    for (const auto& z : f.values) total += std::norm(z);
    return total > 0.0 ? edge / total : 0.0;
}

std::vector<double> abs2(const Field& f) {
    std::vector<double> out(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) out[j] = std::norm(f[j]);
    return out;
}

// ---------------------------------------------------------------------------

const SmoothKernel& KernelSpec::smooth() const {
    if (!is_smooth()) throw RegimeError("smooth kernel required, got homogeneous kernel");
    return std::get<SmoothKernel>(variant);
}

const HomogeneousKernel& KernelSpec::homogeneous() const {
    if (!is_homogeneous()) throw RegimeError("homogeneous kernel required, got smooth kernel");
    return std::get<HomogeneousKernel>(variant);
}

KernelSpec KernelSpec::gaussian(double amplitude) {
    return {SmoothKernel{amplitude, 0.0, -2.0 * amplitude,
                         [amplitude](double y) { return amplitude * std::exp(-y * y); }, "gaussian"}};
}

KernelSpec KernelSpec::lorentzian(double amplitude) {
    return {SmoothKernel{amplitude, 0.0, -2.0 * amplitude,
                         [amplitude](double y) { return amplitude / (1.0 + y * y); }, "lorentzian"}};
}

KernelSpec KernelSpec::constant(double c) {
    return {SmoothKernel{c, 0.0, 0.0, [c](double) { return c; }, "constant"}};
}

KernelSpec KernelSpec::power_law(double lambda, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw KernelError("homogeneous kernel requires 0 < gamma < 1, got " + std::to_string(gamma));
    return {HomogeneousKernel{lambda, gamma}};
}

KernelSpec KernelSpec::smooth_custom(double k0, double grad0, double hess0,
                                     std::function<double(double)> eval) {
    return {SmoothKernel{k0, grad0, hess0, std::move(eval), "custom"}};
}

KernelSpec KernelSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                args.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("cannot parse number '" + item + "' in kernel '" + text + "'");
            }
        }
    }
    auto arg = [&](std::size_t i, double fallback) { return i < args.size() ? args[i] : fallback; };
    if (name == "zero") return zero();
    if (name == "constant") return constant(arg(0, 1.0));
    if (name == "gaussian") return gaussian(arg(0, 1.0));
    if (name == "lorentzian") return lorentzian(arg(0, 1.0));
    if (name == "power_law" || name == "homogeneous") return power_law(arg(0, 1.0), arg(1, 0.5));
    throw ConfigError("unknown kernel '" + text + "'");
}

std::string KernelSpec::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (is_homogeneous()) {
        os << "power_law:" << homogeneous().lambda << "," << homogeneous().gamma;
        return os.str();
    }
    const auto& k = smooth();
    if (k.name == "constant" && k.k0 == 0.0) return "zero";
    if (k.name == "custom") return "custom";
    os << k.name << ":" << k.k0;
    return os.str();
}

KernelJet taylor_kernel_coefficients(const KernelSpec& kernel, double tol) {
    const auto& k = kernel.smooth();
    if (!k.eval) throw KernelError("smooth kernel has no evaluator");

    // Richardson-extrapolated central differences, O(h^4).
    auto d1 = [&](double h) { return (k.eval(h) - k.eval(-h)) / (2.0 * h); };
    auto d2 = [&](double h) { return (k.eval(h) - 2.0 * k.eval(0.0) + k.eval(-h)) / (h * h); };
    const double h = 1e-2;
    const double grad_fd = (4.0 * d1(h / 2) - d1(h)) / 3.0;
    const double hess_fd = (4.0 * d2(h / 2) - d2(h)) / 3.0;

    auto check = [tol](double stored, double fd, const char* what) {
        if (std::abs(stored - fd) > tol * (1.0 + std::abs(stored)))
            throw KernelError(std::string("kernel jet inconsistent with evaluator: ") + what +
                              " stored " + std::to_string(stored) + " vs " + std::to_string(fd));
    };
    check(k.k0, k.eval(0.0), "K(0)");
    check(k.grad0, grad_fd, "K'(0)");
    check(k.hess0, hess_fd, "K''(0)");
    return {k.k0, k.grad0, k.hess0};
}

double power_law_cell_average(double y, double h, double gamma) {
    const double p = 1.0 - gamma;
    const double ay = std::abs(y);
    if (ay < 0.5 * h) {
        // only the centered cell contains the singularity
        return std::pow(0.5 * h, -gamma) / p;
    }
    const double a = ay - 0.5 * h;
    const double b = ay + 0.5 * h;
    return (std::pow(b, p) - std::pow(a, p)) / (p * h);
}

ConvolutionOperator::ConvolutionOperator(const Grid1D& grid, const std::function<double(long)>& sample)
    : grid_(grid), samples_(2 * grid.n(), 0.0), kernel_hat_(2 * grid.n()) {
    const long n = static_cast<long>(grid.n());
    samples_[0] = sample(0);
    for (long m = 1; m < n; ++m) {
        samples_[m] = sample(m);
        samples_[2 * n - m] = sample(-m);
    }
    for (std::size_t j = 0; j < samples_.size(); ++j) kernel_hat_[j] = samples_[j];
    fft_forward(kernel_hat_);
}

ConvolutionOperator ConvolutionOperator::for_kernel(const Grid1D& grid, const KernelSpec& kernel) {
    if (kernel.is_homogeneous()) {
        const auto& hk = kernel.homogeneous();
        if (!(hk.gamma > 0.0 && hk.gamma < 1.0))
            throw KernelError("homogeneous kernel requires 0 < gamma < 1");
        return power_law(grid, hk.gamma, hk.lambda);
    }
    return scaled_smooth(grid, kernel.smooth(), 1.0, 1.0, 0.0);
}

ConvolutionOperator ConvolutionOperator::scaled_smooth(const Grid1D& grid, const SmoothKernel& kernel,
                                                       double scale, double coefficient, double subtract) {
    const double h = grid.spacing();
    return ConvolutionOperator(grid, [&](long m) {
        return coefficient * (kernel.eval(scale * static_cast<double>(m) * h) - subtract);
    });
}

ConvolutionOperator ConvolutionOperator::power_law(const Grid1D& grid, double gamma, double coefficient) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw KernelError("homogeneous kernel requires 0 < gamma < 1");
    const double h = grid.spacing();
    return ConvolutionOperator(grid, [&](long m) {
        return coefficient * power_law_cell_average(static_cast<double>(m) * h, h, gamma);
    });
}

std::vector<double> ConvolutionOperator::apply(std::span<const double> f) const {
    const std::size_t n = grid_.n();
    if (f.size() != n) throw ConfigError("convolution input length does not match grid");
    std::vector<cplx> buf(2 * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) buf[j] = f[j];
    fft_forward(buf);
    for (std::size_t j = 0; j < buf.size(); ++j) buf[j] *= kernel_hat_[j];
    fft_inverse(buf);
    std::vector<double> out(n);
    const double h = grid_.spacing();
    for (std::size_t j = 0; j < n; ++j) out[j] = h * buf[j].real();
    return out;
}

ConvolutionResult hartree_convolution(const Field& f_abs2, const KernelSpec& kernel) {
    const auto op = ConvolutionOperator::for_kernel(f_abs2.grid, kernel);
    std::vector<double> f(f_abs2.size());
    double fmax = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        f[j] = f_abs2[j].real();
        fmax = std::max(fmax, std::abs(f[j]));
    }
    const double edge = std::max(std::abs(f.front()), std::abs(f.back()));
    auto conv = op.apply(f);
    ConvolutionResult out{Field(f_abs2.grid), edge > 1e-12 * std::max(fmax, 1.0)};
    for (std::size_t j = 0; j < conv.size(); ++j) out.value[j] = conv[j];
    return out;
}

}  // namespace hwp
