#include "usual/brr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "usual/csv.hpp"
#include "usual/error.hpp"

namespace usual {

void BRRWeights::validate() const {
  if (replicates() < 2) throw ValidationError("BRR needs at least 2 replicates");
  if (static_cast<std::size_t>(weights.rows()) != ids.size()) {
    throw ValidationError("BRR weights need one row per id");
  }
  if (!(factor > 0.0)) throw ValidationError("BRR perturbation factor must be positive");
  if (!(weights.array() > 0.0).all()) throw ValidationError("BRR replicate weights must be positive");
}

double brr_variance(double full, const std::vector<double>& replicates, double factor) {
  if (replicates.empty()) throw ValidationError("BRR variance needs replicate estimates");
  // Summing in sorted order makes the result independent of replicate order.
  std::vector<double> sq;
  sq.reserve(replicates.size());
  for (double r : replicates) sq.push_back((r - full) * (r - full));
  std::sort(sq.begin(), sq.end());
  double ss = 0.0;
  for (double v : sq) ss += v;
  return ss / (static_cast<double>(replicates.size()) * factor * factor);
}

BRRWeights read_brr_weights(const std::string& path, double factor,
                            const std::string& id_column) {
  const csv::Table t = csv::read(path);
  const std::size_t id_col = t.column(id_column);
  BRRWeights w;
  w.factor = factor;
  std::vector<std::size_t> rep_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c != id_col) rep_cols.push_back(c);
  }
  w.weights.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(rep_cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    w.ids.push_back(t.rows[r][id_col]);
    for (std::size_t j = 0; j < rep_cols.size(); ++j) {
      w.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = csv::to_double(
          t.rows[r][rep_cols[j]], path + " row " + std::to_string(r + 2));
    }
  }
  w.validate();
  return w;
}

void write_brr_weights(const std::string& path, const BRRWeights& w) {
  std::vector<std::string> header{"id"};
  for (std::size_t r = 0; r < w.replicates(); ++r) header.push_back("rep" + std::to_string(r + 1));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < w.ids.size(); ++i) {
    std::vector<std::string> row{w.ids[i]};
    for (std::size_t r = 0; r < w.replicates(); ++r) {
      row.push_back(csv::format(w.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r))));
    }
    rows.push_back(std::move(row));
  }
  csv::write(path, header, rows);
}

BRRWeights fay_replicate_weights(const SurveyDataset& d, std::size_t R, double factor) {
  if (R < 2 || !std::has_single_bit(R)) {
    throw ValidationError("replicate count must be a power of two (got " + std::to_string(R) + ")");
  }
  if (!(factor > 0.0 && factor < 1.0)) {
    throw ValidationError("perturbation factor must lie in (0, 1) for positive replicate weights");
  }
  BRRWeights w;
  w.factor = factor;
  const std::size_t n = d.individuals.size();
  w.weights.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(R));
  for (std::size_t i = 0; i < n; ++i) {
    w.ids.push_back(d.individuals[i].id);
    const std::size_t stratum = 1 + i % (R - 1);
    const double half = (i / (R - 1)) % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t r = 0; r < R; ++r) {
      const double h = std::popcount(r & stratum) % 2 == 0 ? 1.0 : -1.0;
      w.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) =
          d.individuals[i].weight * (1.0 + factor * h * half);
    }
  }
  return w;
}

SurveyDataset replicate_dataset(const SurveyDataset& d, const BRRWeights& w, std::size_t r) {
  if (r >= w.replicates()) throw ValidationError("replicate index out of range");
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < w.ids.size(); ++i) row_of[w.ids[i]] = i;
  Eigen::VectorXd weights(static_cast<Eigen::Index>(d.individuals.size()));
  for (std::size_t i = 0; i < d.individuals.size(); ++i) {
    const auto it = row_of.find(d.individuals[i].id);
    if (it == row_of.end()) {
      throw ValidationError("no replicate weights for id '" + d.individuals[i].id + "'");
    }
    weights(static_cast<Eigen::Index>(i)) =
        w.weights(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(r));
  }
  return with_weights(d, weights);
}

BRRResult run_brr(const SurveyDataset& d, const BRRWeights& w, const BRRPipeline& pipeline,
                  bool parallel) {
  w.validate();
  BRRResult out;
  out.full = pipeline(d, 0);
  const std::size_t R = w.replicates();
  out.replicates.resize(R);

  auto run_one = [&](std::size_t r) {
    ReplicateOutcome& o = out.replicates[r];
    try {
      o.statistics = pipeline(replicate_dataset(d, w, r), r + 1);
      if (o.statistics.size() != out.full.size()) {
        throw ValidationError("replicate returned a different number of statistics");
      }
      o.ok = true;
    } catch (const std::exception& e) {
      o.ok = false;
      o.error = e.what();
    }
  };
  const long Rl = static_cast<long>(R);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long r = 0; r < Rl; ++r) run_one(static_cast<std::size_t>(r));
  } else {
    for (std::size_t r = 0; r < R; ++r) run_one(r);
  }

  for (const auto& o : out.replicates) out.failures += o.ok ? 0 : 1;
  for (std::size_t s = 0; s < out.full.size(); ++s) {
    std::vector<double> values;
    for (const auto& o : out.replicates) {
      if (o.ok && std::isfinite(o.statistics[s])) values.push_back(o.statistics[s]);
    }
    out.used.push_back(values.size());
    if (values.empty() || !std::isfinite(out.full[s])) {
      out.standard_error.push_back(std::nan(""));
    } else {
      out.standard_error.push_back(std::sqrt(brr_variance(out.full[s], values, w.factor)));
    }
  }
  return out;
}

}  // namespace usual
