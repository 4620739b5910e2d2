#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <evsched/behavior.hpp>

using namespace evsched;

TEST_CASE("energy_from_flexibility maps flexibility to demand") {
    REQUIRE(energy_from_flexibility(0.0, 4, 2.0, 1.0, 1.0) == Catch::Approx(8.0));
    REQUIRE(energy_from_flexibility(0.5, 4, 2.0, 1.0, 1.0) == Catch::Approx(4.0));
    REQUIRE(energy_from_flexibility(0.999999, 4, 2.0, 1.0, 1.0) ==
            Catch::Approx(0.0).margin(1e-4));
    REQUIRE_THROWS_AS(energy_from_flexibility(1.0, 4, 2.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("sample_sessions determinism and validity") {
    TimeGrid grid(96, 0.25);
    BehaviorConfig cfg;
    REQUIRE(sample_sessions(cfg, 0, grid, 42).empty());

    const auto a = sample_sessions(cfg, 50, grid, 42);
    const auto b = sample_sessions(cfg, 50, grid, 42);
    REQUIRE(a.size() == 50);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].id == b[i].id);
        REQUIRE(a[i].t_start == b[i].t_start);
        REQUIRE(a[i].duration == b[i].duration);
        REQUIRE(a[i].energy_req == b[i].energy_req);
    }

    EventLog log;
    for (const auto& s : a) {
        const auto checked = validate_session(s, grid, &log);
        REQUIRE(checked.energy_req == s.energy_req); // no further repairs
        REQUIRE(s.t_start + s.duration <= grid.steps);
        REQUIRE(s.duration >= 1);
        REQUIRE(s.energy_req <= s.battery_cap + 1e-12);
    }
    REQUIRE(log.events.empty());
}

TEST_CASE("extending the fleet keeps earlier draws unchanged") {
    TimeGrid grid(96, 0.25);
    BehaviorConfig cfg;
    const auto small = sample_sessions(cfg, 20, grid, 7);
    const auto large = sample_sessions(cfg, 40, grid, 7);
    for (std::size_t i = 0; i < small.size(); ++i) {
        REQUIRE(small[i].t_start == large[i].t_start);
        REQUIRE(small[i].duration == large[i].duration);
        REQUIRE(small[i].energy_req == large[i].energy_req);
    }
}

TEST_CASE("sampled start hours match the configured mixture mean", "[statistical]") {
    TimeGrid grid(96, 0.25);
    BehaviorConfig cfg;
    const int n = 10000;
    const auto sessions = sample_sessions(cfg, n, grid, 2024);
    double mean = 0.0;
    for (const auto& s : sessions) mean += s.t_start * grid.step_hours;
    mean /= n;

    // mixture std is ~5.3 h; allow 3 standard errors
    double var = 0.0;
    for (const auto& m : cfg.start_mixture)
        var += m.weight * (m.std_hour * m.std_hour + m.mean_hour * m.mean_hour);
    const double mix_mean = cfg.mixture_mean_hour();
    var -= mix_mean * mix_mean;
    const double se = std::sqrt(var / n);
    REQUIRE(std::abs(mean - mix_mean) < 3.0 * se + 0.5 * grid.step_hours);
}

TEST_CASE("perturb_session identity, clamping and determinism") {
    TimeGrid grid(96, 0.25);
    ChargingSession s;
    s.id = 9;
    s.t_start = 30;
    s.duration = 20;
    s.p_max = 6.6;
    s.eta = 1.0;
    s.battery_cap = 60.0;
    s.energy_req = 20.0;

    SECTION("zero sigmas are the identity") {
        PerturbationConfig cfg;
        const auto r = perturb_session(s, cfg, grid);
        REQUIRE(r.duration_steps == s.duration);
        REQUIRE(r.energy_kwh == Catch::Approx(s.energy_req));
    }
    SECTION("realized demand never exceeds the realized stay's capacity") {
        PerturbationConfig cfg;
        cfg.sigma_d_steps = 8.0;
        cfg.sigma_e_kwh = 30.0;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            cfg.seed = seed;
            const auto r = perturb_session(s, cfg, grid);
            REQUIRE(r.duration_steps >= 1);
            REQUIRE(s.t_start + r.duration_steps <= grid.steps);
            REQUIRE(r.energy_kwh >= 0.0);
            REQUIRE(r.energy_kwh <=
                    s.rate_limit() * r.duration_steps * grid.step_hours + 1e-12);
            REQUIRE(r.energy_kwh <= s.battery_cap + 1e-12);
        }
    }
    SECTION("fixed seed reproduces the same pair") {
        PerturbationConfig cfg;
        cfg.sigma_d_steps = 2.0;
        cfg.sigma_e_frac = 0.1;
        cfg.seed = 33;
        const auto r1 = perturb_session(s, cfg, grid);
        const auto r2 = perturb_session(s, cfg, grid);
        REQUIRE(r1.duration_steps == r2.duration_steps);
        REQUIRE(r1.energy_kwh == r2.energy_kwh);
    }
}

TEST_CASE("perturb_profile identity, floor and deviation scale") {
    std::vector<double> series(10000, 100.0);

    SECTION("sigma zero is the identity") {
        Rng rng(1);
        REQUIRE(perturb_profile(series, 0.0, rng) == series);
    }
    SECTION("floored series stays nonnegative") {
        Rng rng(2);
        const auto out = perturb_profile(series, 1.5, rng, true);
        for (double v : out) REQUIRE(v >= 0.0);
    }
    SECTION("relative RMS deviation is close to sigma", "[statistical]") {
        Rng rng(3);
        const double sigma = 0.08;
        const auto out = perturb_profile(series, sigma, rng);
        double ss = 0.0;
        for (std::size_t t = 0; t < series.size(); ++t) {
            const double rel = (out[t] - series[t]) / series[t];
            ss += rel * rel;
        }
        const double rms = std::sqrt(ss / series.size());
        REQUIRE(rms == Catch::Approx(sigma).epsilon(0.2));
    }
}
