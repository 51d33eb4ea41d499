#include "robreg/densities.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "robreg/errors.hpp"
#include "robreg/special_functions.hpp"

namespace robreg {

namespace sf = robreg::special;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// log(1 + y^2 / nu) without overflowing y^2.
double log1p_sq_over(double y, double nu) {
    const double ay = std::abs(y);
    if (ay < 1e100) return std::log1p(ay * ay / nu);
    return 2.0 * std::log(ay) - std::log(nu) + std::log1p(nu / (ay * ay));
}

double student_log_norm(double nu) {
    return sf::log_gamma(0.5 * (nu + 1.0)) - sf::log_gamma(0.5 * nu) -
           0.5 * std::log(std::numbers::pi * nu);
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string to_string(TailKind kind) {
    switch (kind) {
        case TailKind::RegularlyVarying:
            return "regularly_varying";
        case TailKind::LogRegularlyVarying:
            return "log_regularly_varying";
        case TailKind::ExponentialTail:
            return "exponential";
    }
    return "unknown";
}

std::string ErrorDensity::label() const {
    return std::visit(overloaded{
                          [](const NormalFamily&) { return std::string("normal"); },
                          [](const StudentTFamily& t) {
                              return "student_t(nu=" + format_number(t.nu) + ")";
                          },
                          [](const LptnFamily& l) {
                              return "lptn(rho=" + format_number(l.rho) + ")";
                          },
                      },
                      family);
}

ErrorDensity normal_error() {
    ErrorDensity d;
    d.family = NormalFamily{};
    d.sup_density = sf::kInvSqrt2Pi;
    d.tail = TailClass{TailKind::ExponentialTail, 0.0, 0.0};
    return d;
}

TailClass student_tail_constants(double nu) {
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw DomainError("student_tail_constants: nu must be positive, got " + format_number(nu));
    const double log_c = sf::log_gamma(0.5 * (nu + 1.0)) + 0.5 * nu * std::log(nu) -
                         0.5 * std::log(std::numbers::pi) - sf::log_gamma(0.5 * nu);
    return TailClass{TailKind::RegularlyVarying, std::exp(log_c), nu};
}

ErrorDensity student_t_error(double nu) {
    ErrorDensity d;
    d.tail = student_tail_constants(nu);
    d.family = StudentTFamily{nu};
    d.sup_density = std::exp(student_log_norm(nu));
    return d;
}

ErrorDensity lptn_build(double rho) {
    const double lower = 2.0 * sf::normal_cdf(1.0) - 1.0;
    if (!(rho > lower && rho < 1.0))
        throw ConfigError("lptn_build: rho must lie in (2 Phi(1) - 1, 1) = (" +
                          format_number(lower) + ", 1), got " + format_number(rho));
    LptnFamily l;
    l.rho = rho;
    l.theta = sf::normal_quantile(0.5 * (1.0 + rho));
    l.lambda = 2.0 / (1.0 - rho) * sf::normal_pdf(l.theta) * l.theta * std::log(l.theta);

    ErrorDensity d;
    d.family = l;
    d.sup_density = sf::kInvSqrt2Pi;
    const double log_c = sf::normal_logpdf(l.theta) + std::log(l.theta) +
                         (l.lambda + 1.0) * std::log(std::log(l.theta));
    d.tail = TailClass{TailKind::LogRegularlyVarying, std::exp(log_c), l.lambda};
    return d;
}

double error_logpdf(const ErrorDensity& d, double y) {
    return std::visit(
        overloaded{
            [y](const NormalFamily&) { return sf::normal_logpdf(y); },
            [y](const StudentTFamily& t) {
                return student_log_norm(t.nu) - 0.5 * (t.nu + 1.0) * log1p_sq_over(y, t.nu);
            },
            [y](const LptnFamily& l) {
                const double ay = std::abs(y);
                if (ay < l.theta) return sf::normal_logpdf(y);
                return sf::normal_logpdf(l.theta) + std::log(l.theta) - std::log(ay) +
                       (l.lambda + 1.0) * (std::log(std::log(l.theta)) - std::log(std::log(ay)));
            },
        },
        d.family);
}

double error_dlogpdf(const ErrorDensity& d, double y) {
    return std::visit(overloaded{
                          [y](const NormalFamily&) { return -y; },
                          [y](const StudentTFamily& t) {
                              if (y == 0.0) return 0.0;
                              return -(t.nu + 1.0) / (y + t.nu / y);
                          },
                          [y](const LptnFamily& l) {
                              const double ay = std::abs(y);
                              if (ay < l.theta) return -y;
                              return -(1.0 + (l.lambda + 1.0) / std::log(ay)) / y;
                          },
                      },
                      d.family);
}

TailClass RobustGammaDensity::right_tail() const {
    const double log_c = log_fmid_zr + std::log(z_r) + lambda_r * std::log(std::log(z_r));
    return TailClass{TailKind::LogRegularlyVarying, std::exp(log_c), lambda_r - 1.0};
}

double robust_gamma_mid_logpdf(const RobustGammaDensity& d, double z) {
    return -d.nu * z + (d.nu - 1.0) * std::log(z) + d.log_norm;
}

RobustGammaDensity robust_gamma_build(double nu, double c) {
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw DomainError("robust_gamma_build: nu must be positive, got " + format_number(nu));
    if (!(c > 0.0) || !std::isfinite(c))
        throw DomainError("robust_gamma_build: c must be positive, got " + format_number(c));

    RobustGammaDensity d;
    d.nu = nu;
    d.c = c;
    d.log_norm = nu * std::log(nu) - sf::log_gamma(nu);
    const double half_width = c / std::sqrt(nu);
    d.z_r = 1.0 + half_width;
    d.z_l = nu > 1.0 ? std::max(0.0, 1.0 - half_width) : 0.0;
    d.has_left_tail = d.z_l > 0.0;

    d.log_fmid_zr = robust_gamma_mid_logpdf(d, d.z_r);
    const double right_survival = sf::reg_gamma_upper(nu, nu * d.z_r);
    d.lambda_r = 1.0 + std::exp(d.log_fmid_zr) * std::log(d.z_r) * d.z_r / right_survival;

    if (d.has_left_tail) {
        d.log_fmid_zl = robust_gamma_mid_logpdf(d, d.z_l);
        const double left_cdf = sf::reg_gamma_lower(nu, nu * d.z_l);
        d.lambda_l =
            1.0 + std::exp(d.log_fmid_zl) * std::log(1.0 / d.z_l) * d.z_l / left_cdf;
    }
    return d;
}

double robust_gamma_logpdf_at_log(const RobustGammaDensity& d, double log_z) {
    const double log_zr = std::log(d.z_r);
    if (log_z > log_zr) {
        return d.log_fmid_zr + log_zr - log_z +
               d.lambda_r * (std::log(log_zr) - std::log(log_z));
    }
    if (d.has_left_tail) {
        const double log_zl = std::log(d.z_l);
        if (log_z < log_zl) {
            return d.log_fmid_zl + log_zl - log_z +
                   *d.lambda_l * (std::log(-log_zl) - std::log(-log_z));
        }
    }
    return -d.nu * std::exp(log_z) + (d.nu - 1.0) * log_z + d.log_norm;
}

double robust_gamma_logpdf(const RobustGammaDensity& d, double z) {
    if (!(z > 0.0)) throw DomainError("robust_gamma_logpdf: z must be positive");
    if (std::isinf(z)) return -std::numeric_limits<double>::infinity();
    // Branches are selected on z itself so the breakpoints are hit exactly.
    if (z > d.z_r) {
        return d.log_fmid_zr + std::log(d.z_r / z) +
               d.lambda_r * (std::log(std::log(d.z_r)) - std::log(std::log(z)));
    }
    if (d.has_left_tail && z < d.z_l) {
        return d.log_fmid_zl + std::log(d.z_l / z) +
               *d.lambda_l * (std::log(std::log(1.0 / d.z_l)) - std::log(-std::log(z)));
    }
    return robust_gamma_mid_logpdf(d, z);
}

double robust_gamma_dlogpdf_dlog(const RobustGammaDensity& d, double log_z) {
    if (log_z > std::log(d.z_r)) return -1.0 - d.lambda_r / log_z;
    if (d.has_left_tail && log_z < std::log(d.z_l)) return -1.0 - *d.lambda_l / log_z;
    return -d.nu * std::exp(log_z) + (d.nu - 1.0);
}

double robust_gamma_right_tail_mass(const RobustGammaDensity& d) {
    return std::exp(d.log_fmid_zr) * d.z_r * std::log(d.z_r) / (d.lambda_r - 1.0);
}

double robust_gamma_left_tail_mass(const RobustGammaDensity& d) {
    if (!d.has_left_tail)
        throw ConfigError("robust gamma density has no left tail (requires nu > 1 and c < sqrt(nu))");
    return std::exp(d.log_fmid_zl) * d.z_l * std::log(1.0 / d.z_l) / (*d.lambda_l - 1.0);
}

double robust_gamma_core_right_survival(const RobustGammaDensity& d) {
    return sf::reg_gamma_upper(d.nu, d.nu * d.z_r);
}

double robust_gamma_core_left_cdf(const RobustGammaDensity& d) {
    return sf::reg_gamma_lower(d.nu, d.nu * d.z_l);
}

double log_g_sigma(const ErrorDensity& d, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("g_sigma: sigma must be positive");
    switch (d.tail.kind) {
        case TailKind::RegularlyVarying:
            return d.tail.alpha * std::log(sigma);
        case TailKind::LogRegularlyVarying:
            return 0.0;
        case TailKind::ExponentialTail:
            break;
    }
    throw TailClassError("g_sigma: " + d.label() + " has exponential tails; no limit exists");
}

double g_sigma(const ErrorDensity& d, double sigma) { return std::exp(log_g_sigma(d, sigma)); }

double limit_ratio_location_scale(const ErrorDensity& d, double x_beta, double sigma, double y) {
    const double log_g = log_g_sigma(d, sigma);
    const double log_num = -std::log(sigma) + error_logpdf(d, (y - x_beta) / sigma);
    return std::exp(log_num - log_g - error_logpdf(d, y));
}

double glm_limit_ratio(const RobustGammaDensity& d, double mu, double y) {
    if (!(mu > 0.0) || !(y > 0.0)) throw DomainError("glm_limit_ratio: mu and y must be positive");
    if (y < 1.0 && !d.has_left_tail)
        throw ConfigError("glm_limit_ratio: small-y limit requested but the density has no left tail");
    const double log_y = std::log(y);
    const double log_mu = std::log(mu);
    return std::exp(robust_gamma_logpdf_at_log(d, log_y - log_mu) - log_mu -
                    robust_gamma_logpdf_at_log(d, log_y));
}

NormalizationResult normalization_integral(const ErrorDensity& d, double rel_tol) {
    NormalizationResult r;
    auto pdf = [&d](double y) { return std::exp(error_logpdf(d, y)); };

    std::visit(
        overloaded{
            [&](const NormalFamily&) {
                const auto q = integrate_adaptive(pdf, 0.0, 40.0, rel_tol, 8);
                r.central = 2.0 * q.value;
                r.abs_error = 2.0 * q.abs_error;
                r.converged = q.converged;
            },
            [&](const StudentTFamily& t) {
                const auto core = integrate_adaptive(pdf, 0.0, 1.0, rel_tol, 1);
                // Beyond 1, integrate in u = log y where the integrand decays like e^{-nu u}.
                const double upper = (40.0 + std::abs(std::log(d.tail.constant / t.nu))) / t.nu;
                auto in_log = [&](double u) { return std::exp(error_logpdf(d, std::exp(u)) + u); };
                const auto tail = integrate_adaptive(in_log, 0.0, upper, rel_tol,
                                                     static_cast<int>(std::ceil(upper)) + 1);
                r.central = 2.0 * core.value;
                r.tails = 2.0 * tail.value;
                r.abs_error = 2.0 * (core.abs_error + tail.abs_error);
                r.converged = core.converged && tail.converged;
            },
            [&](const LptnFamily& l) {
                const auto q = integrate_adaptive(pdf, 0.0, l.theta, rel_tol, 2);
                r.central = 2.0 * q.value;
                r.tails = 2.0 * sf::normal_pdf(l.theta) * l.theta * std::log(l.theta) / l.lambda;
                r.abs_error = 2.0 * q.abs_error;
                r.converged = q.converged;
            },
        },
        d.family);
    r.total = r.central + r.tails;
    return r;
}

NormalizationResult normalization_integral(const RobustGammaDensity& d, double rel_tol) {
    NormalizationResult r;
    auto mid = [&d](double z) { return std::exp(robust_gamma_mid_logpdf(d, z)); };
    QuadratureResult q;
    if (d.z_l > 0.0 || d.nu >= 1.0) {
        q = integrate_adaptive(mid, d.z_l, d.z_r, rel_tol, 4);
    } else {
        // Integrable singularity at 0 for nu < 1: substitute z = w^(1/nu).
        auto smooth = [&d](double w) {
            if (w <= 0.0) return std::exp(d.log_norm) / d.nu;
            const double z = std::pow(w, 1.0 / d.nu);
            return std::exp(-d.nu * z + d.log_norm) / d.nu;
        };
        q = integrate_adaptive(smooth, 0.0, std::pow(d.z_r, d.nu), rel_tol, 4);
    }
    r.central = q.value;
    r.abs_error = q.abs_error;
    r.converged = q.converged;
    r.tails = robust_gamma_right_tail_mass(d);
    if (d.has_left_tail) r.tails += robust_gamma_left_tail_mass(d);
    r.total = r.central + r.tails;
    return r;
}

}  // namespace robreg
