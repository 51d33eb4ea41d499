#include "robreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "robreg/densities.hpp"
#include "robreg/marginal.hpp"
#include "robreg/records.hpp"
#include "robreg/special_functions.hpp"

namespace robreg {

using nlohmann::json;

namespace {

void add(std::vector<DiagnosticEntry>& out, std::string name, double achieved, double tol, std::string detail = {}) {
    out.push_back({std::move(name), std::isfinite(achieved) && achieved <= tol, achieved, tol, std::move(detail)});
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

std::string fmt(double v) { return format_real(v); }

void density_checks(std::vector<DiagnosticEntry>& out, const ErrorDensity& t, const ErrorDensity& lptn,
                    const RobustGammaDensity& rg) {
    for (const auto* d : {&t, &lptn}) {
        const auto norm = normalization_integral(*d);
        add(out, "normalization " + d->label(), std::abs(norm.total - 1.0), 1e-6, "total=" + fmt(norm.total));
    }
    const auto rg_norm = normalization_integral(rg);
    add(out, "normalization " + std::string("robust_gamma"), std::abs(rg_norm.total - 1.0), 1e-6,
        "total=" + fmt(rg_norm.total));

    const auto& l = std::get<LptnFamily>(lptn.family);
    const double tail = special::normal_pdf(l.theta) * l.theta * std::log(l.theta) / l.lambda;
    add(out, "lptn tail mass equals (1-rho)/2", std::abs(tail - 0.5 * (1.0 - l.rho)), 1e-10);
    add(out, "lptn continuity at theta",
        rel_diff(std::exp(error_logpdf(lptn, l.theta)), special::normal_pdf(std::nextafter(l.theta, 0.0))), 1e-12);

    add(out, "robust_gamma right tail mass", std::abs(robust_gamma_right_tail_mass(rg) - robust_gamma_core_right_survival(rg)),
        1e-10);
    add(out, "robust_gamma continuity at z_r",
        rel_diff(std::exp(robust_gamma_logpdf(rg, std::nextafter(rg.z_r, 2.0 * rg.z_r))),
                 std::exp(robust_gamma_mid_logpdf(rg, rg.z_r))),
        1e-12);
    if (rg.has_left_tail) {
        add(out, "robust_gamma left tail mass",
            std::abs(robust_gamma_left_tail_mass(rg) - robust_gamma_core_left_cdf(rg)), 1e-10);
        add(out, "robust_gamma continuity at z_l",
            rel_diff(std::exp(robust_gamma_logpdf(rg, std::nextafter(rg.z_l, 0.0))),
                     std::exp(robust_gamma_mid_logpdf(rg, rg.z_l))),
            1e-12);
    }
}

void tail_limit_checks(std::vector<DiagnosticEntry>& out, const ErrorDensity& d) {
    const double y = 1e8;
    const double ly = std::log(y);
    double log_form = std::log(d.tail.constant);
    double tol = 0.01;
    if (d.tail.kind == TailKind::RegularlyVarying) {
        log_form -= (d.tail.alpha + 1.0) * ly;
    } else {
        log_form -= ly + (d.tail.alpha + 1.0) * std::log(ly);
        tol = 0.05;
    }
    add(out, "tail form " + d.label() + " at y=1e8", std::abs(std::exp(error_logpdf(d, y) - log_form) - 1.0), tol);
}

void limit_checks(std::vector<DiagnosticEntry>& out, const ErrorDensity& d, const std::vector<double>& sigmas,
                  const std::vector<double>& betas) {
    double worst_monotone = 0.0;
    bool monotone = true;
    for (double s : sigmas)
        for (double b : betas) {
            double prev = std::numeric_limits<double>::infinity();
            for (double y : {1e4, 1e6, 1e8}) {
                const double dev = std::abs(limit_ratio_location_scale(d, b, s, y) - 1.0);
                // Deviations at rounding level count as converged.
                if (!(dev < prev) && dev > 1e-12) monotone = false;
                prev = dev;
                worst_monotone = std::max(worst_monotone, dev);
            }
        }
    add(out, "location-scale limit ratio approaches 1 monotonically, " + d.label(), monotone ? 0.0 : 1.0, 0.0,
        "max deviation on grid=" + fmt(worst_monotone));
    if (d.tail.kind == TailKind::RegularlyVarying) {
        double worst = 0.0;
        for (double s : sigmas)
            for (double b : betas) worst = std::max(worst, std::abs(limit_ratio_location_scale(d, b, s, 1e8) - 1.0));
        add(out, "location-scale limit ratio at y=1e8, " + d.label(), worst, 1e-3);
    }
}

void glm_checks(std::vector<DiagnosticEntry>& out, const RobustGammaDensity& rg) {
    const double mu = std::exp(1.0);
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (double y : {1e4, 1e8, 1e16, 1e64}) {
        const double dev = std::abs(glm_limit_ratio(rg, mu, y) - 1.0);
        monotone = monotone && dev < prev;
        prev = dev;
    }
    add(out, "glm limit ratio approaches 1 as y grows", monotone ? 0.0 : 1.0, 0.0, "deviation at 1e64=" + fmt(prev));
    if (rg.has_left_tail) {
        prev = std::numeric_limits<double>::infinity();
        monotone = true;
        for (double y : {1e-4, 1e-8, 1e-16, 1e-64}) {
            const double dev = std::abs(glm_limit_ratio(rg, mu, y) - 1.0);
            monotone = monotone && dev < prev;
            prev = dev;
        }
        add(out, "glm limit ratio approaches 1 as y shrinks", monotone ? 0.0 : 1.0, 0.0,
            "deviation at 1e-64=" + fmt(prev));
    }

    // (1/mu) f(y/mu) is unimodal in mu with its mode at mu = y.
    double worst_mode = 0.0, worst_value = 0.0;
    const double bound_log_base = rg.nu * (std::log(rg.nu) - 1.0) - special::log_gamma(rg.nu);
    for (double y : {0.05, 0.7, 1.0, 3.0, 40.0}) {
        auto neg = [&](double log_mu) { return -(robust_gamma_logpdf(rg, y * std::exp(-log_mu)) - log_mu); };
        const auto [arg, val] =
            boost::math::tools::brent_find_minima(neg, std::log(y) - 3.0, std::log(y) + 3.0, 52);
        worst_mode = std::max(worst_mode, std::abs(std::exp(arg) - y) / y);
        const double bound = bound_log_base - std::log(y);
        worst_value = std::max(worst_value, std::abs(std::expm1(-val - bound)));
    }
    add(out, "glm term mode at mu = y", worst_mode, 1e-6);
    add(out, "glm term maximum equals (nu/e)^nu/(y Gamma(nu))", worst_value, 1e-8);
}

void lemma_checks(std::vector<DiagnosticEntry>& out, const ErrorDensity& t) {
    std::vector<double> grid;
    for (int k = 0; k < 100; ++k) grid.push_back(0.1 + (10.0 - 0.1) * k / 99.0);
    const auto b3 = gaussian_tail_bound_check(1.0, grid);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& p : b3.points) worst = std::max(worst, p.survival - p.bound);
    add(out, "gaussian tail bound on [0.1, 10] sigma0", b3.holds ? 0.0 : worst, 0.0);

    const auto seq = lemma_b2_sequence(t.tail, 20, {1.0}, {1e2, 1e3, 1e4});
    add(out, "lemma b2 sequence decay (n=20, one outlier)", std::exp(seq.back().log_value - seq.front().log_value), 1e-6);
    bool decreasing = true;
    for (std::size_t k = 1; k < seq.size(); ++k) decreasing = decreasing && seq[k].log_value < seq[k - 1].log_value;
    add(out, "lemma b2 sequence decreasing", decreasing ? 0.0 : 1.0, 0.0);
}

}  // namespace

std::vector<DiagnosticEntry> diagnostics_run(const json& config) {
    const auto sigmas = config.value("sigma_grid", std::vector<double>{0.5, 1.0, 2.0});
    const auto betas = config.value("beta_grid", std::vector<double>{-5.0, 0.0, 5.0});
    const auto t = student_t_error(config.value("student_nu", 4.0));
    const auto lptn = lptn_build(config.value("lptn_rho", 0.95));
    const json rgj = config.value("robust_gamma", json::object());
    const auto rg = robust_gamma_build(rgj.value("nu", 2.0), rgj.value("c", 1.0));

    std::vector<DiagnosticEntry> out;
    density_checks(out, t, lptn, rg);
    tail_limit_checks(out, t);
    tail_limit_checks(out, lptn);
    limit_checks(out, t, sigmas, betas);
    limit_checks(out, lptn, sigmas, betas);
    glm_checks(out, rg);
    lemma_checks(out, t);
    return out;
}

json to_json(const std::vector<DiagnosticEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries)
        arr.push_back({{"name", e.name},
                       {"passed", e.passed},
                       {"achieved", e.achieved},
                       {"tolerance", e.tolerance},
                       {"detail", e.detail}});
    return json{{"all_passed", all_passed(entries)}, {"checks", arr}};
}

bool all_passed(const std::vector<DiagnosticEntry>& entries) {
    return std::all_of(entries.begin(), entries.end(), [](const DiagnosticEntry& e) { return e.passed; });
}

}  // namespace robreg
