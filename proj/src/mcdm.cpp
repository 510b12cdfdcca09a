#include "casemix/mcdm.hpp"

#include <algorithm>
#include <cmath>


namespace casemix {

namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw PreconditionError(std::string(what) + " has " + std::to_string(got) +
                            " entries, expected " + std::to_string(want));
}

void require_positive(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x))
      throw PreconditionError(std::string(what) + " entries must be positive and finite");
}

}  // namespace

double scaled_distance(const CaseMix& a, const CaseMix& b, const std::vector<double>& scale) {
  require_size(b.size(), a.size(), "second case mix");
  require_size(scale.size(), a.size(), "scale");
  require_positive(scale, "scale");
  double sum = 0.0;
  for (std::size_t g = 0; g < a.size(); ++g) {
    const double d = (a[g] - b[g]) / scale[g];
    sum += d * d;
  }
  return std::sqrt(sum);
}

Similarity similarity(const CaseMix& a, const CaseMix& b, const std::vector<double>& epsilon) {
  require_size(b.size(), a.size(), "second case mix");
  require_size(epsilon.size(), a.size(), "epsilon");
  Similarity s;
  std::size_t same = 0;
  for (std::size_t g = 0; g < a.size(); ++g) {
    const bool sig = std::abs(a[g] - b[g]) > epsilon[g];
    s.significant.push_back(sig);
    if (!sig) ++same;
  }
  s.los = a.size() == 0 ? 100.0 : 100.0 * static_cast<double>(same) / static_cast<double>(a.size());
  s.lod = 100.0 - s.los;
  s.similar = same == a.size();
  return s;
}

std::vector<Boundary> similarity_boundary(const CaseMix& mix, const std::vector<double>& epsilon,
                                          double lambda, const std::vector<double>& upper) {
  require_size(epsilon.size(), mix.size(), "epsilon");
  require_size(upper.size(), mix.size(), "upper bounds");
  if (!(lambda >= 0.0)) throw PreconditionError("lambda must be non-negative");
  std::vector<Boundary> out;
  for (std::size_t g = 0; g < mix.size(); ++g) {
    auto around = [&](double r) {
      return Interval{std::clamp(mix[g] - r, 0.0, upper[g]), std::clamp(mix[g] + r, 0.0, upper[g])};
    };
    out.push_back({around(epsilon[g]), around(lambda * epsilon[g])});
  }
  return out;
}

double proximity(const CaseMix& mix, const CaseMix& ideal, const CaseMix& anti_ideal,
                 const std::vector<double>& epsilon) {
  const double span = scaled_distance(ideal, anti_ideal, epsilon);
  if (span == 0.0) throw PreconditionError("ideal and anti-ideal coincide");
  return 100.0 * scaled_distance(mix, ideal, epsilon) / span;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::first_better:
      return "first_better";
    case Verdict::second_better:
      return "second_better";
    case Verdict::even:
      return "even";
  }
  return "even";
}

CompareResult compare(const CaseMix& a, const CaseMix& b, const CompareOptions& opt) {
  const std::size_t G = a.size();
  require_size(b.size(), G, "second case mix");

  std::vector<double> divisor(G, 1.0);
  switch (opt.normalization) {
    case Normalization::range:
    case Normalization::upper_only: {
      require_size(opt.upper.size(), G, "upper bounds");
      if (!opt.lower.empty()) require_size(opt.lower.size(), G, "lower bounds");
      for (std::size_t g = 0; g < G; ++g) {
        const double lo =
            opt.normalization == Normalization::range && !opt.lower.empty() ? opt.lower[g] : 0.0;
        divisor[g] = opt.upper[g] - lo;
        if (!(divisor[g] > 0.0) || !std::isfinite(divisor[g]))
          throw PreconditionError("upper bound must exceed lower bound for every type");
      }
      break;
    }
    case Normalization::epsilon:
      require_size(opt.epsilon.size(), G, "epsilon");
      require_positive(opt.epsilon, "epsilon");
      divisor = opt.epsilon;
      break;
  }

  std::vector<bool> used(G, opt.subset.empty());
  for (std::size_t g : opt.subset) {
    if (g >= G) throw PreconditionError("subset names an unknown type");
    used[g] = true;
  }

  CompareResult r;
  r.deltas.assign(G, 0.0);
  r.gains.assign(G, 0.0);
  r.losses.assign(G, 0.0);
  double gain_sq = 0.0, loss_sq = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    if (!used[g]) continue;
    const double d = (b[g] - a[g]) / divisor[g];
    r.deltas[g] = d;
    if (d > 0.0) {
      r.gains[g] = d;
      gain_sq += d * d;
    } else if (d < 0.0) {
      r.losses[g] = -d;
      loss_sq += d * d;
    }
  }
  r.gain_norm = std::sqrt(gain_sq);
  r.loss_norm = std::sqrt(loss_sq);
  if (r.loss_norm > 0.0) r.ratio = r.gain_norm / r.loss_norm;

  if (!r.ratio)
    r.verdict = r.gain_norm > 0.0 ? Verdict::second_better : Verdict::even;
  else if (*r.ratio > 1.0 + opt.tie_tolerance)
    r.verdict = Verdict::second_better;
  else if (*r.ratio < 1.0 - opt.tie_tolerance)
    r.verdict = Verdict::first_better;
  else
    r.verdict = Verdict::even;

  if (opt.normalization == Normalization::epsilon && r.verdict != Verdict::even) {
    const auto& side = r.verdict == Verdict::second_better ? r.gains : r.losses;
    r.significant = std::any_of(side.begin(), side.end(), [](double v) { return v > 1.0; });
  }
  return r;
}

}  // namespace casemix
