#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "airbeam/beamform.hpp"
#include "airbeam/errors.hpp"

namespace airbeam {

namespace {

// Calls emit(k) for every multiplicity vector k (k[i-1] copies of part i)
// with sum_i i * k[i-1] == n, parts chosen from largest to smallest.
template <typename Emit>
void enumerate_partitions(int remaining, int max_part, std::vector<int>& k, Emit&& emit) {
  if (remaining == 0) {
    emit(k);
    return;
  }
  for (int part = std::min(remaining, max_part); part >= 1; --part) {
    ++k[part - 1];
    enumerate_partitions(remaining - part, part, k, emit);
    --k[part - 1];
  }
}

}  // namespace

NewtonGirardExpansion::NewtonGirardExpansion(int order) : order_(order) {
  if (order < 1) throw InvalidArgument("Newton-Girard order must be >= 1");
  std::vector<int> k(order, 0);
  enumerate_partitions(order, order, k, [&](const std::vector<int>& mult) {
    int parts = 0;
    double denominator = 1.0;
    for (int i = 1; i <= order; ++i) {
      const int ki = mult[i - 1];
      parts += ki;
      denominator *= std::tgamma(ki + 1.0) * std::pow(static_cast<double>(i), ki);
    }
    const double sign = ((order - parts) % 2 == 0) ? 1.0 : -1.0;
    terms_.push_back({sign / denominator, mult});
  });

  factor_offsets_.push_back(0);
  for (const auto& term : terms_) {
    coefficients_.push_back(term.coefficient);
    for (int i = 0; i < order; ++i)
      for (int rep = 0; rep < term.exponents[i]; ++rep) factors_.push_back(i);
    factor_offsets_.push_back(static_cast<int>(factors_.size()));
  }
}

const NewtonGirardExpansion& NewtonGirardExpansion::for_order(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<NewtonGirardExpansion>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<NewtonGirardExpansion>(order);
  return *slot;
}

double NewtonGirardExpansion::evaluate(std::span<const double> p) const {
  if (p.size() < static_cast<std::size_t>(order_)) throw InvalidArgument("not enough power sums for this order");
  double total = 0.0;
  for (std::size_t t = 0; t < coefficients_.size(); ++t) {
    double product = coefficients_[t];
    for (int f = factor_offsets_[t]; f < factor_offsets_[t + 1]; ++f) product *= p[factors_[f]];
    total += product;
  }
  return total;
}

double dmas_general(std::span<const double> slice, int n) {
  if (n < 2) throw InvalidArgument("DMAS order must be >= 2");
  if (slice.size() < static_cast<std::size_t>(n))
    throw InvalidArgument("DMAS order " + std::to_string(n) + " needs at least that many channels");
  const auto p = power_sums(slice, n);
  return NewtonGirardExpansion::for_order(n).evaluate(p);
}

double dmas_brute_force(std::span<const double> slice, int n) {
  if (n < 1) throw InvalidArgument("subset size must be >= 1");
  const std::size_t count = slice.size();
  const auto size = static_cast<std::size_t>(n);
  if (count < size) throw InvalidArgument("fewer channels than the DMAS order");
  double subsets = 1.0;
  for (std::size_t j = 0; j < size; ++j)
    subsets = subsets * static_cast<double>(count - j) / static_cast<double>(j + 1);
  if (subsets > 1e7) throw InvalidArgument("brute-force DMAS refuses more than 1e7 subsets");

  std::vector<double> roots(count);
  for (std::size_t i = 0; i < count; ++i) roots[i] = signed_root(slice[i], n);

  std::vector<std::size_t> idx(size);
  for (std::size_t j = 0; j < size; ++j) idx[j] = j;
  double total = 0.0;
  for (;;) {
    double product = 1.0;
    for (std::size_t j : idx) product *= roots[j];
    total += product;
    // Advance to the next combination in lexicographic order.
    std::size_t pos = size;
    while (pos > 0 && idx[pos - 1] == count - size + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < size; ++j) idx[j] = idx[j - 1] + 1;
  }
  return total;
}

}  // namespace airbeam
