#include <doctest.h>

#include <deque>
#include <vector>

#include "orpsim/automaton.hpp"

using namespace orpsim;

namespace {

// Independent oracle: plain evaluation of the linear reward/penalty
// update equations, kept separate from the Automaton implementation.
std::vector<double> oracle_reward(std::vector<double> p, std::size_t i, double a) {
    for (std::size_t j = 0; j < p.size(); ++j) {
        p[j] = (j == i) ? p[j] + a * (1.0 - p[j]) : p[j] - a * p[j];
    }
    return p;
}

std::vector<double> oracle_penalize(std::vector<double> p, std::size_t i, double b) {
    if (p.size() == 1) return p;
    double share = b / static_cast<double>(p.size() - 1);
    for (std::size_t j = 0; j < p.size(); ++j) {
        p[j] = (j == i) ? (1.0 - b) * p[j] : share + (1.0 - b) * p[j];
    }
    return p;
}

} // namespace

TEST_CASE("uniform initialization") {
    Automaton a4(4);
    for (double p : a4.probs()) CHECK(p == doctest::Approx(0.25));
    CHECK(a4.iterations() == 0);

    Automaton a1(1);
    CHECK(a1.probs() == std::vector<double>{1.0});

    Automaton a3(3);
    double sum = 0.0;
    for (double p : a3.probs()) {
        CHECK(p == doctest::Approx(1.0 / 3));
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0));

    CHECK_THROWS_AS(Automaton(0), std::invalid_argument);
}

TEST_CASE("select_action follows the distribution") {
    SUBCASE("point mass") {
        Automaton a(3);
        a.reward(0, 1.0); // -> [1,0,0]
        Rng rng = make_rng(7);
        for (int k = 0; k < 50; ++k) CHECK(a.select_action(rng) == 0);
    }
    SUBCASE("empirical frequency") {
        Automaton a(2);
        Rng rng = make_rng(11);
        int zeros = 0;
        for (int k = 0; k < 10000; ++k) {
            if (a.select_action(rng) == 0) ++zeros;
        }
        CHECK(zeros / 10000.0 == doctest::Approx(0.5).epsilon(0.04));
    }
    SUBCASE("deterministic under a fixed seed") {
        Automaton a(4);
        Rng r1 = make_rng(42), r2 = make_rng(42);
        for (int k = 0; k < 100; ++k) CHECK(a.select_action(r1) == a.select_action(r2));
    }
}

TEST_CASE("reward update") {
    Automaton a(4);
    a.reward(0, 0.8);
    CHECK(a.probs()[0] == doctest::Approx(0.85));
    for (std::size_t j = 1; j < 4; ++j) CHECK(a.probs()[j] == doctest::Approx(0.05));
    CHECK(a.iterations() == 1);

    SUBCASE("vanishing rate leaves the distribution unchanged") {
        Automaton b(4);
        b.reward(2, 1e-12);
        for (double p : b.probs()) CHECK(p == doctest::Approx(0.25));
    }
    SUBCASE("certainty is a fixed point") {
        Automaton b(2);
        b.reward(0, 1.0); // -> [1,0]
        b.reward(0, 0.5);
        CHECK(b.probs()[0] == doctest::Approx(1.0));
        CHECK(b.probs()[1] == doctest::Approx(0.0));
    }
    SUBCASE("index out of range") {
        Automaton b(3);
        CHECK_THROWS_AS(b.reward(3, 0.5), std::invalid_argument);
    }
}

TEST_CASE("penalize update") {
    Automaton a(4);
    a.reward(0, 0.8); // [0.85, 0.05, 0.05, 0.05]
    a.penalize(0, 0.05);
    CHECK(a.probs()[0] == doctest::Approx(0.8075));
    for (std::size_t j = 1; j < 4; ++j) {
        CHECK(a.probs()[j] == doctest::Approx(0.05 / 3 + 0.95 * 0.05));
    }

    SUBCASE("zero rate is identity") {
        Automaton b(4);
        b.penalize(1, 0.0);
        for (double p : b.probs()) CHECK(p == doctest::Approx(0.25));
    }
    SUBCASE("two actions") {
        Automaton b(2);
        b.penalize(0, 0.1);
        CHECK(b.probs()[0] == doctest::Approx(0.45));
        CHECK(b.probs()[1] == doctest::Approx(0.55));
    }
    SUBCASE("single action cannot be penalized away") {
        Automaton b(1);
        b.penalize(0, 0.5);
        CHECK(b.probs() == std::vector<double>{1.0});
        CHECK(b.iterations() == 1);
    }
    SUBCASE("index out of range") {
        Automaton b(3);
        CHECK_THROWS_AS(b.penalize(5, 0.05), std::invalid_argument);
    }
}

TEST_CASE("updates match the equation oracle") {
    Rng rng = make_rng(1234);
    std::uniform_int_distribution<std::size_t> rdist(2, 12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int fixture = 0; fixture < 100; ++fixture) {
        std::size_t r = rdist(rng);
        Automaton a(r);
        // Random walk to a non-trivial distribution.
        std::uniform_int_distribution<std::size_t> idist(0, r - 1);
        for (int k = 0; k < 5; ++k) {
            std::size_t i = idist(rng);
            if (u(rng) < 0.5) {
                a.reward(i, 0.1 + 0.3 * u(rng));
            } else {
                a.penalize(i, 0.2 * u(rng));
            }
        }
        std::vector<double> before = a.probs();
        std::size_t i = idist(rng);
        if (u(rng) < 0.5) {
            double rate = 0.01 + 0.98 * u(rng);
            a.reward(i, rate);
            auto expect = oracle_reward(before, i, rate);
            for (std::size_t j = 0; j < r; ++j) {
                CHECK(a.probs()[j] == doctest::Approx(expect[j]).epsilon(1e-12));
            }
        } else {
            double rate = 0.98 * u(rng);
            a.penalize(i, rate);
            auto expect = oracle_penalize(before, i, rate);
            for (std::size_t j = 0; j < r; ++j) {
                CHECK(a.probs()[j] == doctest::Approx(expect[j]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("simplex and monotonicity properties") {
    Rng rng = make_rng(99);
    std::uniform_int_distribution<std::size_t> rdist(2, 50);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int seq = 0; seq < 200; ++seq) {
        std::size_t r = rdist(rng);
        Automaton a(r);
        std::uniform_int_distribution<std::size_t> idist(0, r - 1);
        for (int step = 0; step < 30; ++step) {
            std::size_t i = idist(rng);
            std::vector<double> before = a.probs();
            bool rewarded = u(rng) < 0.5;
            double rate = rewarded ? 0.01 + 0.98 * u(rng) : 0.98 * u(rng);
            if (rewarded) {
                a.reward(i, rate);
                if (before[i] < 1.0) CHECK(a.probs()[i] > before[i]);
            } else {
                a.penalize(i, rate);
                if (before[i] > 0.0 && rate > 0.0) CHECK(a.probs()[i] < before[i]);
            }
            double sum = 0.0;
            for (double p : a.probs()) {
                CHECK(p >= 0.0);
                CHECK(p <= 1.0);
                sum += p;
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
            // Ranking of non-selected actions is preserved.
            for (std::size_t x = 0; x < r; ++x) {
                for (std::size_t y = x + 1; y < r; ++y) {
                    if (x == i || y == i) continue;
                    if (before[x] < before[y]) CHECK(a.probs()[x] <= a.probs()[y]);
                    if (before[x] > before[y]) CHECK(a.probs()[x] >= a.probs()[y]);
                }
            }
        }
    }
}

TEST_CASE("convergence detection") {
    ConvergencePolicy policy;
    SUBCASE("by probability") {
        Automaton a(2);
        a.reward(0, 0.95); // p0 = 0.5 + 0.95*0.5 = 0.975
        ConvergenceStatus s = check_convergence(a, {}, policy);
        CHECK(s.state == ConvergenceStatus::State::ConvergedByProbability);
        CHECK(s.action == 0);
    }
    SUBCASE("by stall") {
        Automaton a(2);
        a.reward(0, 0.2); // [0.6, 0.4]
        std::deque<double> history(20, 0.7);
        ConvergenceStatus s = check_convergence(a, history, policy);
        CHECK(s.state == ConvergenceStatus::State::ConvergedByStall);
        CHECK(s.action == 0);
    }
    SUBCASE("at the iteration limit, ties break low") {
        Automaton a(2);
        std::deque<double> history;
        for (int k = 0; k < 500; ++k) {
            // zero-rate updates keep the distribution at the uniform tie
            a.reward(0, 0.0);
            history.push_back(k % 2 ? 0.3 : 0.7);
            if (history.size() > policy.stall_window) history.pop_front();
        }
        CHECK(a.iterations() == 500);
        ConvergenceStatus s = check_convergence(a, history, policy);
        CHECK(s.state == ConvergenceStatus::State::StoppedAtLimit);
        CHECK(s.action == 0);
    }
    SUBCASE("otherwise running") {
        Automaton a(3);
        ConvergenceStatus s = check_convergence(a, {0.1, 0.9}, policy);
        CHECK(s.state == ConvergenceStatus::State::Running);
    }
}

TEST_CASE("statistical convergence in a stochastic two-action environment") {
    // Action 0 rewarded with probability 0.9, action 1 with 0.1.
    int converged_to_0 = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng = make_rng(seed, 0xabc, 0);
        Automaton a(2);
        LearningParams lp;
        ConvergencePolicy policy;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::deque<double> history; // unused: stall disabled by varying rhos
        ConvergenceStatus s = check_convergence(a, history, policy);
        while (!s.done()) {
            std::size_t i = a.select_action(rng);
            double p_reward = (i == 0) ? 0.9 : 0.1;
            if (u(rng) < p_reward) {
                a.reward(i, lp.lambda_reward);
            } else {
                a.penalize(i, lp.lambda_penalty);
            }
            s = check_convergence(a, history, policy);
        }
        if (s.state == ConvergenceStatus::State::ConvergedByProbability && s.action == 0) {
            ++converged_to_0;
        }
    }
    CHECK(converged_to_0 >= 90);
}
