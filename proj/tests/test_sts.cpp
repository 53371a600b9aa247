#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gqd/sts.hpp"

using namespace gqd;
using Catch::Approx;

TEST_CASE("binary entropy values", "[sts]") {
    CHECK(binary_entropy(0.5) == 0.0);
    CHECK(binary_entropy(1.5) == Approx(2.0 * std::log(2.0)).epsilon(1e-15));
    CHECK(binary_entropy(1.0) == Approx(0.95477125244221923).epsilon(1e-15));
    CHECK_THROWS_AS(binary_entropy(0.49), std::domain_error);
    CHECK_THROWS_AS(binary_entropy(std::nan("")), std::domain_error);
    // rounding noise just below 1/2 is treated as the boundary
    CHECK(binary_entropy(0.5 - 1e-13) == 0.0);
}

TEST_CASE("binary entropy is increasing", "[sts]") {
    double prev = binary_entropy(0.5);
    for (double x = 0.6; x < 5.0; x += 0.1) {
        const double h = binary_entropy(x);
        CHECK(h > prev);
        prev = h;
    }
}

TEST_CASE("discord spot values", "[sts]") {
    CHECK(std::fabs(sts_discord({0.0, 0.3})) < 1e-15);
    CHECK(sts_discord({0.5, 0.0}) == Approx(0.95477125244221923).epsilon(1e-14));
    CHECK(sts_discord({1.0, 0.5}) == Approx(0.75025729575951356).epsilon(1e-14));
    CHECK_THROWS_AS(sts_discord({-0.1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(sts_discord({0.1, -0.2}), std::invalid_argument);
}

TEST_CASE("discord limits across the grid", "[sts]") {
    for (double nt = 0.0; nt <= 5.0; nt += 0.25)
        CHECK(std::fabs(sts_discord({0.0, nt})) <= 1e-12);
    for (double ns = 0.0; ns <= 5.0; ns += 0.25)
        CHECK(sts_discord({ns, 0.0}) ==
              Approx(binary_entropy(ns + 0.5)).margin(1e-12));
}

TEST_CASE("three discord routes agree", "[sts]") {
    for (double ns = 0.0; ns <= 5.0; ns += 0.37) {
        for (double nt = 0.0; nt <= 2.0; nt += 0.23) {
            const StsParams p{ns, nt};
            const double d1 = sts_discord(p);
            const double d2 = sts_discord_kappa(p);
            const double d3 = cm_discord(sts_covariance(p, VacuumUnit::half));
            CHECK(std::fabs(d1 - d2) <= 1e-10);
            CHECK(std::fabs(d1 - d3) <= 1e-10);
            CHECK(std::fabs(d2 - d3) <= 1e-10);
        }
    }
}

TEST_CASE("discord strictly increases with squeezing photons", "[sts]") {
    for (double nt = 0.0; nt <= 2.0; nt += 0.4) {
        double prev = sts_discord({0.0, nt});
        for (double ns = 0.05; ns <= 5.0; ns += 0.05) {
            const double d = sts_discord({ns, nt});
            CHECK(d > prev);
            prev = d;
        }
    }
}

TEST_CASE("quadrature variances", "[sts]") {
    const QuadVariances vac = quadrature_variances({0.0, 0.0});
    CHECK(vac.sq == 1.0);
    CHECK(vac.asq == 1.0);

    const QuadVariances v = quadrature_variances({0.125, 0.0});
    CHECK(v.sq == Approx(0.5).epsilon(1e-15));
    CHECK(v.asq == Approx(2.0).epsilon(1e-15));

    const QuadVariances w = quadrature_variances({1.0, 0.5});
    CHECK(w.sq == Approx(0.34314575050761980).epsilon(1e-14));
    CHECK(w.asq == Approx(11.656854249492380).epsilon(1e-14));
    CHECK(w.sq * w.asq == Approx(4.0).epsilon(1e-13));
}

TEST_CASE("quadrature variance product identity", "[sts]") {
    for (double ns = 0.0; ns <= 5.0; ns += 0.31) {
        for (double nt = 0.0; nt <= 2.0; nt += 0.29) {
            const QuadVariances v = quadrature_variances({ns, nt});
            const double target = (1.0 + 2.0 * nt) * (1.0 + 2.0 * nt);
            CHECK(v.sq * v.asq == Approx(target).epsilon(1e-12));
            CHECK(v.sq > 0.0);
            CHECK(v.sq <= v.asq);
        }
    }
}

TEST_CASE("effective photons limits", "[sts]") {
    const StsParams off = effective_photons({0.0, 0.73, 0.62});
    CHECK(off.n_s == 0.0);
    CHECK(off.n_t == 0.0);

    // no pump: vacuum for any gamma, eta
    for (double g = 0.0; g <= 1.0; g += 0.2) {
        for (double e = 0.1; e <= 1.0; e += 0.3) {
            const StsParams p = effective_photons({0.0, g, e});
            CHECK(p.n_s == 0.0);
            CHECK(p.n_t == 0.0);
        }
    }

    // pure two-mode squeezed vacuum limit
    for (double r = 0.0; r <= 2.0; r += 0.2) {
        const StsParams p = effective_photons({r, 0.0, 1.0});
        const double sh = std::sinh(r);
        CHECK(p.n_s == Approx(sh * sh).margin(1e-12));
        CHECK(std::fabs(p.n_t) <= 1e-12);
    }
}

TEST_CASE("effective photons fixture", "[sts]") {
    const StsParams p = effective_photons({0.5, 0.73, 0.62});
    CHECK(p.n_s == Approx(0.091104614553345785).epsilon(1e-13));
    CHECK(p.n_t == Approx(0.15820107031347668).epsilon(1e-13));
    CHECK(sts_discord(p) == Approx(0.17758325180196948).epsilon(1e-13));
}

TEST_CASE("effective photons rejects bad parameters", "[sts]") {
    CHECK_THROWS_AS(effective_photons({-0.1, 0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(effective_photons({0.5, -0.2, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(effective_photons({0.5, 0.2, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(effective_photons({0.5, 0.2, 1.2}), std::invalid_argument);
}

TEST_CASE("sts covariance entries", "[sts]") {
    const CovMatrix2Mode vac = sts_covariance({0.0, 0.0}, VacuumUnit::one);
    CHECK(vac.a == 1.0);
    CHECK(vac.c == 0.0);

    const CovMatrix2Mode one = sts_covariance({1.0, 0.5}, VacuumUnit::one);
    CHECK(one.a == Approx(6.0).epsilon(1e-15));
    CHECK(one.c == Approx(5.6568542494923802).epsilon(1e-15));

    const CovMatrix2Mode half = sts_covariance({1.0, 0.5}, VacuumUnit::half);
    CHECK(half.a == Approx(3.0).epsilon(1e-15));
    CHECK(half.c == Approx(2.8284271247461901).epsilon(1e-15));

    for (double ns = 0.0; ns <= 5.0; ns += 0.5) {
        for (double nt = 0.0; nt <= 2.0; nt += 0.5) {
            CHECK(sts_covariance({ns, nt}, VacuumUnit::one).valid());
            CHECK(sts_covariance({ns, nt}, VacuumUnit::half).valid());
        }
    }
}

TEST_CASE("cm discord", "[sts]") {
    CHECK(cm_discord({0.5, 0.0, VacuumUnit::half}) == 0.0);
    CHECK(cm_discord(sts_covariance({1.0, 0.5}, VacuumUnit::half)) ==
          Approx(0.75025729575951356).epsilon(1e-12));
    CHECK(cm_discord(sts_covariance({0.5, 0.0}, VacuumUnit::half)) ==
          Approx(0.95477125244221923).epsilon(1e-12));
    // the CM formula is defined in the vacuum-1/2 convention only
    CHECK_THROWS_AS(cm_discord(sts_covariance({1.0, 0.5}, VacuumUnit::one)),
                    std::invalid_argument);
    // unphysical matrix: correlation above the physical limit
    CHECK_THROWS_AS(cm_discord({0.6, 0.55, VacuumUnit::half}), std::invalid_argument);
}

TEST_CASE("symplectic eigenvalues of an STS equal N_t + 1/2", "[sts]") {
    for (double ns = 0.0; ns <= 5.0; ns += 0.45) {
        for (double nt = 0.0; nt <= 2.0; nt += 0.4) {
            const auto [dm, dp] = cm_symplectic_eigenvalues(
                sts_covariance({ns, nt}, VacuumUnit::half));
            CHECK(dm == Approx(nt + 0.5).margin(1e-12));
            CHECK(dp == Approx(nt + 0.5).margin(1e-12));
        }
    }
}
