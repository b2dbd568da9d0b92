#ifndef ORPSIM_AUTOMATON_HPP
#define ORPSIM_AUTOMATON_HPP

#include <cstddef>
#include <deque>
#include <stdexcept>
#include <variant>
#include <vector>

#include "orpsim/common.hpp"

namespace orpsim {

// Learning rates of the linear reward/penalty scheme plus the threshold
// that splits favorable from unfavorable responses.
struct LearningParams {
    double lambda_reward = 0.8;   // in (0,1]
    double lambda_penalty = 0.05; // in [0,1)
    double threshold = 0.5;       // in (0,1)

    void validate() const {
        if (!(lambda_reward > 0.0 && lambda_reward <= 1.0)) {
            throw std::invalid_argument("lambda_reward must be in (0,1]");
        }
        if (!(lambda_penalty >= 0.0 && lambda_penalty < 1.0)) {
            throw std::invalid_argument("lambda_penalty must be in [0,1)");
        }
        if (!(threshold > 0.0 && threshold < 1.0)) {
            throw std::invalid_argument("threshold must be in (0,1)");
        }
    }
};

struct ConvergencePolicy {
    double prob_threshold = 0.95;
    std::size_t stall_window = 20;
    double stall_epsilon = 1e-6;
    std::size_t max_iterations = 500;

    void validate() const {
        if (!(prob_threshold > 0.5 && prob_threshold <= 1.0)) {
            throw std::invalid_argument("prob_threshold must be in (0.5,1]");
        }
        if (stall_window == 0) {
            throw std::invalid_argument("stall_window must be positive");
        }
        if (max_iterations < stall_window) {
            throw std::invalid_argument("max_iterations must be >= stall_window");
        }
    }
};

struct ConvergenceStatus {
    enum class State { Running, ConvergedByProbability, ConvergedByStall, StoppedAtLimit };
    State state = State::Running;
    std::size_t action = 0; // valid for any non-Running state

    bool done() const { return state != State::Running; }
};

// Variable-structure learning automaton: the action-probability vector is
// the whole state. Entries stay in [0,1] and sum to 1 after every update.
class Automaton {
public:
    explicit Automaton(std::size_t r)
        : probs_(r, r > 0 ? 1.0 / static_cast<double>(r) : 0.0) {
        if (r == 0) {
            throw std::invalid_argument("automaton needs at least one action");
        }
    }

    std::size_t size() const { return probs_.size(); }
    std::size_t iterations() const { return iterations_; }
    const std::vector<double>& probs() const { return probs_; }

    std::size_t select_action(Rng& rng) const {
        std::discrete_distribution<std::size_t> dist(probs_.begin(), probs_.end());
        return dist(rng);
    }

    // p_i += a(1-p_i); p_j -= a p_j for j != i
    void reward(std::size_t i, double lambda_reward) {
        check_index(i);
        const double a = lambda_reward;
        for (std::size_t j = 0; j < probs_.size(); ++j) {
            probs_[j] = (j == i) ? probs_[j] + a * (1.0 - probs_[j])
                                 : probs_[j] - a * probs_[j];
        }
        ++iterations_;
        renormalize();
    }

    // p_i *= (1-b); p_j = b/(r-1) + (1-b) p_j for j != i.
    // With a single action there is nowhere to move mass: no-op.
    void penalize(std::size_t i, double lambda_penalty) {
        check_index(i);
        if (probs_.size() == 1) {
            ++iterations_;
            return;
        }
        const double b = lambda_penalty;
        const double redistribute = b / static_cast<double>(probs_.size() - 1);
        for (std::size_t j = 0; j < probs_.size(); ++j) {
            probs_[j] = (j == i) ? (1.0 - b) * probs_[j]
                                 : redistribute + (1.0 - b) * probs_[j];
        }
        ++iterations_;
        renormalize();
    }

    // Ties break toward the lowest index.
    std::size_t best_action() const {
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs_.size(); ++j) {
            if (probs_[j] > probs_[best]) best = j;
        }
        return best;
    }

private:
    void check_index(std::size_t i) const {
        if (i >= probs_.size()) {
            throw std::invalid_argument("action index out of range");
        }
    }

    // Guard against drift over long reward/penalize sequences.
    void renormalize() {
        double sum = 0.0;
        for (double& p : probs_) {
            if (p < 0.0) p = 0.0;
            if (p > 1.0) p = 1.0;
            sum += p;
        }
        if (sum > 0.0) {
            for (double& p : probs_) p /= sum;
        }
    }

    std::vector<double> probs_;
    std::size_t iterations_ = 0;
};

inline ConvergenceStatus check_convergence(const Automaton& aut,
                                           const std::deque<double>& rho_history,
                                           const ConvergencePolicy& policy) {
    policy.validate();
    const auto& p = aut.probs();
    std::size_t best = aut.best_action();
    if (p[best] >= policy.prob_threshold) {
        return {ConvergenceStatus::State::ConvergedByProbability, best};
    }
    if (rho_history.size() >= policy.stall_window) {
        double lo = rho_history[rho_history.size() - policy.stall_window];
        double hi = lo;
        for (std::size_t k = rho_history.size() - policy.stall_window;
             k < rho_history.size(); ++k) {
            lo = std::min(lo, rho_history[k]);
            hi = std::max(hi, rho_history[k]);
        }
        if (hi - lo < policy.stall_epsilon) {
            return {ConvergenceStatus::State::ConvergedByStall, best};
        }
    }
    if (aut.iterations() >= policy.max_iterations) {
        return {ConvergenceStatus::State::StoppedAtLimit, best};
    }
    return {ConvergenceStatus::State::Running, 0};
}

} // namespace orpsim

#endif
