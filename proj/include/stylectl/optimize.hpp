#pragma once

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylectl/error.hpp"
#include "stylectl/losses.hpp"
#include "stylectl/tensor.hpp"
#include "stylectl/vgg.hpp"

namespace stylectl {

enum class InitKind { content, noise, provided };

struct Initialisation {
  InitKind kind = InitKind::content;
  std::uint64_t seed = 0;       // noise
  std::optional<Tensor> image;  // provided, in network input space
};

struct IterationRecord {
  int iteration = 0;
  double total = 0.0;
  std::vector<std::pair<std::string, double>> terms;
  double step = 0.0;  // accepted line-search step; 0 for the initial point
  int evaluations = 0;
};

struct OptimizerConfig {
  int max_iterations = 500;
  int history = 10;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_line_search_trials = 20;
  double convergence_tolerance = 1e-6;  // relative loss change ...
  int convergence_window = 5;           // ... over this many iterations
  double initial_step = 1.0;            // max pixel change of the first step (0-255 scale)
  Initialisation init;
  std::function<void(const IterationRecord&)> on_iteration;

  void validate() const {
    if (max_iterations < 0) throw ConfigError("optimizer: max_iterations must be non-negative");
    if (history <= 0) throw ConfigError("optimizer: history must be positive");
    if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw ConfigError("optimizer: armijo_c1 must be in (0,1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("optimizer: backtrack must be in (0,1)");
    if (max_line_search_trials <= 0) throw ConfigError("optimizer: line-search trials must be positive");
    if (!(convergence_tolerance > 0.0)) throw ConfigError("optimizer: convergence tolerance must be positive");
    if (convergence_window <= 0) throw ConfigError("optimizer: convergence window must be positive");
    if (!(initial_step > 0.0)) throw ConfigError("optimizer: initial step must be positive");
  }
};

enum class Termination { max_iterations, converged, zero_gradient, line_search_failed };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::max_iterations: return "max_iterations";
    case Termination::converged: return "converged";
    case Termination::zero_gradient: return "zero_gradient";
    case Termination::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

struct RunReport {
  std::vector<IterationRecord> history;  // entry 0 is the initial point
  int iterations = 0;                    // accepted steps
  int max_iterations = 0;
  int evaluations = 0;
  double wall_seconds = 0.0;
  Termination termination = Termination::max_iterations;

  double initial_total() const { return history.front().total; }
  double final_total() const { return history.back().total; }

  /// True when no accepted step increased the total loss.
  bool monotone() const {
    for (std::size_t i = 1; i < history.size(); ++i) {
      if (history[i].total > history[i - 1].total) return false;
    }
    return true;
  }
};

/// {"iter":..,"total":..,"terms":{name:value},"step":..}
inline std::string telemetry_line(const IterationRecord& r) {
  nlohmann::ordered_json j;
  j["iter"] = r.iteration;
  j["total"] = r.total;
  nlohmann::ordered_json terms = nlohmann::ordered_json::object();
  for (const auto& [name, v] : r.terms) terms[name] = v;
  j["terms"] = terms;
  j["step"] = r.step;
  return j.dump();
}

struct ObjectiveSample {
  double value = 0.0;
  std::vector<std::pair<std::string, double>> terms;
};

/// f(x, grad_out) -> value; the gradient is written into grad_out.
using Objective = std::function<ObjectiveSample(std::span<const double>, std::span<double>)>;

struct LbfgsResult {
  std::vector<double> x;
  RunReport report;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

// d = -H g by the two-loop recursion with H0 = (s^T y / y^T y) I.
inline std::vector<double> two_loop(const std::vector<double>& g, const std::deque<CurvaturePair>& mem) {
  std::vector<double> q = g;
  std::vector<double> alpha(mem.size());
  for (std::size_t k = mem.size(); k-- > 0;) {
    alpha[k] = mem[k].rho * dot(mem[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * mem[k].y[i];
  }
  const auto& last = mem.back();
  const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
  for (auto& v : q) v *= gamma;
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double beta = mem[k].rho * dot(mem[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += mem[k].s[i] * (alpha[k] - beta);
  }
  for (auto& v : q) v = -v;
  return q;
}

}  // namespace detail

/// Limited-memory BFGS with Armijo backtracking.
inline LbfgsResult lbfgs(const Objective& f, std::vector<double> x, const OptimizerConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  LbfgsResult result;
  RunReport& report = result.report;
  report.max_iterations = cfg.max_iterations;

  auto record = [&](IterationRecord r) {
    if (cfg.on_iteration) cfg.on_iteration(r);
    report.history.push_back(std::move(r));
  };
  auto finish = [&](Termination t) {
    report.termination = t;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.x = std::move(x);
    return std::move(result);
  };

  std::vector<double> g(x.size());
  ObjectiveSample cur = f(x, g);
  report.evaluations = 1;
  if (!std::isfinite(cur.value)) throw NumericError("optimizer: non-finite loss at iteration 0", 0);
  record({0, cur.value, cur.terms, 0.0, 1});

  if (cfg.max_iterations == 0) return finish(Termination::max_iterations);
  if (cur.value == 0.0 || detail::max_abs(g) == 0.0) return finish(Termination::zero_gradient);

  std::deque<detail::CurvaturePair> mem;
  std::vector<double> xn(x.size());
  std::vector<double> gn(x.size());
  for (int k = 1; k <= cfg.max_iterations; ++k) {
    auto steepest = [&] {
      std::vector<double> d(g.size());
      const double scale = cfg.initial_step / detail::max_abs(g);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] = -g[i] * scale;
      return d;
    };
    std::vector<double> d = mem.empty() ? steepest() : detail::two_loop(g, mem);
    double gtd = detail::dot(g, d);
    if (!(gtd < 0.0)) {
      mem.clear();
      d = steepest();
      gtd = detail::dot(g, d);
    }

    double t = 1.0;
    bool accepted = false;
    ObjectiveSample next;
    int evals = 0;
    for (int trial = 0; trial < cfg.max_line_search_trials; ++trial) {
      for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] + t * d[i];
      next = f(xn, gn);
      ++evals;
      ++report.evaluations;
      if (!std::isfinite(next.value)) {
        throw NumericError("optimizer: non-finite loss at iteration " + std::to_string(k), k);
      }
      if (next.value <= cur.value + cfg.armijo_c1 * t * gtd) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack;
    }
    if (!accepted) return finish(Termination::line_search_failed);

    detail::CurvaturePair pair{std::vector<double>(x.size()), std::vector<double>(x.size()), 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
      pair.s[i] = xn[i] - x[i];
      pair.y[i] = gn[i] - g[i];
    }
    const double sy = detail::dot(pair.s, pair.y);
    if (sy > 1e-10 * std::sqrt(detail::dot(pair.s, pair.s) * detail::dot(pair.y, pair.y))) {
      pair.rho = 1.0 / sy;
      mem.push_back(std::move(pair));
      if (mem.size() > static_cast<std::size_t>(cfg.history)) mem.pop_front();
    }
    std::swap(x, xn);
    std::swap(g, gn);
    cur = std::move(next);
    report.iterations = k;
    record({k, cur.value, cur.terms, t, evals});

    if (cur.value == 0.0 || detail::max_abs(g) == 0.0) return finish(Termination::zero_gradient);
    if (k >= cfg.convergence_window) {
      const double before = report.history[static_cast<std::size_t>(k - cfg.convergence_window)].total;
      if (std::abs(before - cur.value) <= cfg.convergence_tolerance * std::abs(cur.value)) {
        return finish(Termination::converged);
      }
    }
  }
  return finish(Termination::max_iterations);
}

struct OptimizationResult {
  Tensor image;  // network input space, clamped to the valid pixel range
  RunReport report;
};

/// Starting point in network input space.
inline Tensor initial_image(const NetworkModel& model, const Tensor& content, const Initialisation& init) {
  switch (init.kind) {
    case InitKind::content:
      return content;
    case InitKind::provided:
      if (!init.image) throw ConfigError("optimizer: 'provided' initialisation without an image");
      if (init.image->shape() != content.shape()) {
        throw ConfigError("optimizer: initial image " + init.image->shape().str() +
                          " does not match content " + content.shape().str());
      }
      return *init.image;
    case InitKind::noise: {
      const auto [lo, hi] = model.pixel_bounds();
      std::mt19937_64 rng(init.seed);
      Tensor out(content.shape());
      for (std::size_t c = 0; c < out.channels(); ++c) {
        std::uniform_real_distribution<double> u(lo[c], hi[c]);
        for (auto& v : out.channel(c)) v = static_cast<float>(u(rng));
      }
      return out;
    }
  }
  throw ConfigError("optimizer: unknown initialisation");
}

inline Tensor clamp_to_pixels(const NetworkModel& model, Tensor image) {
  const auto [lo, hi] = model.pixel_bounds();
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (auto& v : image.channel(c)) {
      v = static_cast<float>(std::clamp(static_cast<double>(v), lo[c], hi[c]));
    }
  }
  return image;
}

/// Minimises the program's total loss over the pixels of an image in network
/// input space. Runs unconstrained and clamps only the final result.
/// `content` fixes the output size and serves the content initialisation.
inline OptimizationResult minimise(const NetworkModel& model, const LossProgram& program, const Tensor& content,
                                   const OptimizerConfig& config) {
  program.validate(model);
  const Tensor start = initial_image(model, content, config.init);
  const Shape shape = start.shape();
  std::vector<double> x0(start.data().begin(), start.data().end());

  Tensor work(shape);
  Objective f = [&](std::span<const double> x, std::span<double> grad) {
    for (std::size_t i = 0; i < x.size(); ++i) work[i] = static_cast<float>(x[i]);
    auto obj = evaluate_objective(model, program, work);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = static_cast<double>(obj.grad[i]);
    return ObjectiveSample{obj.total, std::move(obj.terms)};
  };
  auto res = lbfgs(f, std::move(x0), config);

  Tensor image(shape);
  for (std::size_t i = 0; i < image.size(); ++i) image[i] = static_cast<float>(res.x[i]);
  return {clamp_to_pixels(model, std::move(image)), std::move(res.report)};
}

}  // namespace stylectl
