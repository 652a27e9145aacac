#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace spillover {

struct VocabCounts {
    std::map<std::string, double> counts;
    double total = 0.0;

    void add(const std::string& word, double n = 1.0) {
        counts[word] += n;
        total += n;
    }

    template <typename TokenRange>
    static VocabCounts from_tokens(const TokenRange& tokens) {
        VocabCounts vc;
        for (const auto& t : tokens) vc.add(t);
        return vc;
    }
};

// L1-penalized deviations of a target corpus from smoothed background
// log-probabilities. Words with large positive eta are distinctive for
// the target corpus.
struct SageModel {
    std::vector<std::string> vocab;           // sorted
    std::vector<double> background_logprob;   // m, exp(m) sums to 1
    std::vector<double> eta;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
    std::vector<double> objective_trace;  // one entry per accepted step
};

namespace detail {

inline double sage_objective(const std::vector<double>& target_counts, double total,
                             const std::vector<double>& m, const std::vector<double>& eta,
                             double lambda) {
    // log-sum-exp over m + eta
    double mx = -1e300;
    for (std::size_t i = 0; i < m.size(); ++i) mx = std::max(mx, m[i] + eta[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) sum += std::exp(m[i] + eta[i] - mx);
    double lse = mx + std::log(sum);
    double obj = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        obj += target_counts[i] * (m[i] + eta[i]);
        obj -= lambda * std::abs(eta[i]);
    }
    obj -= total * lse;
    return obj;
}

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

}  // namespace detail

// Maximizes  sum_w c_w (m_w + eta_w) - C log sum_v exp(m_v + eta_v) - lambda |eta|_1
// by proximal gradient ascent with backtracking. Background probabilities use
// add-one smoothing so target-only words have finite m.
// lambda < 0 requests the default 1.0 * sqrt(C).
inline SageModel fit_sage(const VocabCounts& target, const VocabCounts& background,
                          double lambda = -1.0, int max_iter = 2000, double tol = 1e-10) {
    SageModel model;
    for (const auto& [w, _] : target.counts) model.vocab.push_back(w);
    for (const auto& [w, _] : background.counts)
        if (!target.counts.contains(w)) model.vocab.push_back(w);
    std::sort(model.vocab.begin(), model.vocab.end());
    const std::size_t V = model.vocab.size();
    if (V == 0) throw std::invalid_argument("fit_sage: empty vocabulary");

    std::vector<double> c(V, 0.0);
    double C = 0.0;
    double bg_total = 0.0;
    std::vector<double> bg(V, 0.0);
    for (std::size_t i = 0; i < V; ++i) {
        if (auto it = target.counts.find(model.vocab[i]); it != target.counts.end())
            c[i] = it->second;
        if (auto it = background.counts.find(model.vocab[i]); it != background.counts.end())
            bg[i] = it->second;
        if (!std::isfinite(c[i]) || !std::isfinite(bg[i]) || c[i] < 0 || bg[i] < 0)
            throw std::invalid_argument("fit_sage: non-finite or negative count");
        C += c[i];
        bg_total += bg[i] + 1.0;
    }

    model.background_logprob.resize(V);
    for (std::size_t i = 0; i < V; ++i)
        model.background_logprob[i] = std::log((bg[i] + 1.0) / bg_total);

    model.lambda = lambda < 0 ? std::sqrt(C) : lambda;
    model.eta.assign(V, 0.0);

    const std::vector<double>& m = model.background_logprob;
    double obj = detail::sage_objective(c, C, m, model.eta, model.lambda);
    model.objective_trace.push_back(obj);

    double step = 1.0 / std::max(C, 1.0);  // softmax hessian is bounded by C
    std::vector<double> grad(V), trial(V), p(V);
    for (int iter = 0; iter < max_iter; ++iter) {
        // gradient of the smooth part: c - C * softmax(m + eta)
        double mx = -1e300;
        for (std::size_t i = 0; i < V; ++i) mx = std::max(mx, m[i] + model.eta[i]);
        double z = 0.0;
        for (std::size_t i = 0; i < V; ++i) {
            p[i] = std::exp(m[i] + model.eta[i] - mx);
            z += p[i];
        }
        for (std::size_t i = 0; i < V; ++i) grad[i] = c[i] - C * (p[i] / z);

        // backtracking proximal step; never accept a decrease
        double s = step * 4.0;
        double new_obj = obj;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < V; ++i)
                trial[i] = detail::soft_threshold(model.eta[i] + s * grad[i], s * model.lambda);
            new_obj = detail::sage_objective(c, C, m, trial, model.lambda);
            if (new_obj >= obj) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) break;
        step = s;
        model.eta.swap(trial);
        model.iterations = iter + 1;
        model.objective_trace.push_back(new_obj);
        if (new_obj - obj < tol) {
            obj = new_obj;
            model.converged = true;
            break;
        }
        obj = new_obj;
    }
    model.objective = obj;
    return model;
}

struct Candidate {
    std::string word;
    double eta;
};

// Top-k words by eta descending, ties lexicographic. Words with eta <= 0
// are never candidates.
inline std::vector<Candidate> select_candidates(const SageModel& model, std::size_t k = 300) {
    if (k < 1) throw std::invalid_argument("select_candidates: k must be >= 1");
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < model.vocab.size(); ++i)
        if (model.eta[i] > 0) out.push_back({model.vocab[i], model.eta[i]});
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        if (a.eta != b.eta) return a.eta > b.eta;
        return a.word < b.word;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

}  // namespace spillover
