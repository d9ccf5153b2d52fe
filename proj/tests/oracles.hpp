#pragma once

// Brute-force reference implementations used only by tests. These share no
// code with the production paths they validate: grouping is O(n^2) pairwise
// equality, advantages are a literal transcription of the formulas, and
// gradients come from central finite differences.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gigpo/state_key.hpp"

namespace gigpo::oracle {

struct NaiveStep {
    int traj = 0;
    int t = 0;
    StateKey key;
};

// Groups of step indices (into the input vector), grouped by pairwise
// byte-equality: O(n^2). Groups ordered by first occurrence, members in
// input order.
std::vector<std::vector<int>> naive_group(const std::vector<NaiveStep>& steps);

enum class NaiveMode { std_dev, one };

// Literal (x - mean) / F_norm arithmetic in double precision.
std::vector<double> naive_advantages(const std::vector<double>& returns, NaiveMode mode,
                                     double epsilon = 1e-8);

// Plain backward-sum transcription of the discounted return definition,
// computed independently per index with explicit powers.
std::vector<double> naive_discounted_returns(const std::vector<double>& rewards, double gamma);

// Central finite differences per coordinate; params is restored afterwards.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& objective,
                                std::vector<double> params, double h);

// Hand-rolled scalar adaptive-moment reference for one parameter.
class ScalarAdamRef {
public:
    ScalarAdamRef(double lr, double beta1, double beta2, double eps)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // one ascent step, returns the new parameter value
    double step(double param, double grad);

private:
    double lr_, beta1_, beta2_, eps_;
    double m_ = 0.0, v_ = 0.0;
    int t_ = 0;
};

// Recursive memoized LCS length (a different route than the iterative
// two-row table in the production code).
std::size_t naive_lcs_length(const std::string& a, const std::string& b);

}  // namespace gigpo::oracle
