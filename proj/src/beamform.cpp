#include "airbeam/beamform.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "airbeam/errors.hpp"
#include "airbeam/parallel.hpp"

namespace airbeam {

namespace {

// |x|^(1/n) for a = |x| >= 0. Orders other than 2 and 4 go through one shared
// logarithm so the image kernel can reuse it across orders; the per-pixel
// functions use the same expressions and therefore round identically.
inline double abs_root(double a, int n) noexcept {
  if (n == 2) return std::sqrt(a);
  if (n == 4) return std::sqrt(std::sqrt(a));
  if (a == 0.0) return 0.0;
  return std::exp(std::log(a) / static_cast<double>(n));
}

inline double signed_root_unchecked(double x, int n) noexcept {
  if (x > 0.0) return abs_root(x, n);
  if (x < 0.0) return -abs_root(-x, n);
  return 0.0;
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

BeamformerSpec BeamformerSpec::parse(const std::string& label) {
  std::string s = upper(label);
  bool cf = false;
  for (const std::string suffix : {"-CF", "_CF", "+CF"}) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      cf = true;
      s.resize(s.size() - suffix.size());
      break;
    }
  }
  if (s == "DAS") return das(cf);
  if (s.rfind("DMAS", 0) == 0) {
    const std::string digits = s.substr(4);
    if (digits.empty()) return dmas(2, cf);
    if (digits.find_first_not_of("0123456789") != std::string::npos || digits.size() > 3)
      throw InvalidArgument("unknown beamformer: " + label);
    BeamformerSpec spec = dmas(std::stoi(digits), cf);
    spec.validate();
    return spec;
  }
  throw InvalidArgument("unknown beamformer: " + label);
}

void BeamformerSpec::validate() const {
  if (kind == BeamformerKind::Dmas && order < 2) throw InvalidArgument("DMAS order must be >= 2");
  if (kind == BeamformerKind::Das && order != 1) throw InvalidArgument("DAS has order 1");
  if (!(cf_epsilon >= 0.0)) throw InvalidArgument("CF epsilon must be >= 0");
}

std::string BeamformerSpec::label() const {
  std::string base = kind == BeamformerKind::Das ? "DAS" : "DMAS" + std::to_string(order);
  return apply_cf ? base + "-CF" : base;
}

std::vector<BeamformerSpec> standard_beamformers() {
  std::vector<BeamformerSpec> out;
  for (bool cf : {false, true}) {
    out.push_back(BeamformerSpec::das(cf));
    for (int n = 2; n <= 5; ++n) out.push_back(BeamformerSpec::dmas(n, cf));
  }
  return out;
}

double signed_root(double x, int n) {
  if (n < 1) throw InvalidArgument("root order must be >= 1");
  if (n == 1) return x;
  return signed_root_unchecked(x, n);
}

double das(std::span<const double> slice) noexcept {
  double sum = 0.0;
  for (double v : slice) sum += v;
  return sum;
}

void power_sums(std::span<const double> slice, int n, std::span<double> out) {
  if (n < 1) throw InvalidArgument("power-sum order must be >= 1");
  if (out.size() < static_cast<std::size_t>(n)) throw InvalidArgument("power-sum output too short");
  std::fill(out.begin(), out.begin() + n, 0.0);
  for (double x : slice) {
    const double s = n == 1 ? x : signed_root_unchecked(x, n);
    double p = s;
    out[0] += p;
    for (int k = 1; k < n; ++k) {
      p *= s;
      out[k] += p;
    }
  }
}

std::vector<double> power_sums(std::span<const double> slice, int n) {
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 1)));
  power_sums(slice, n, out);
  return out;
}

double dmas_from_power_sums(std::span<const double> p, int n) {
  if (n < 2 || n > 5) throw InvalidArgument("explicit DMAS expansion exists for orders 2..5");
  if (p.size() < static_cast<std::size_t>(n)) throw InvalidArgument("not enough power sums");
  const double p1 = p[0];
  const double p2 = p[1];
  switch (n) {
    case 2: return 0.5 * (p1 * p1 - p2);
    case 3: {
      const double p3 = p[2];
      return (p1 * p1 * p1 + 2.0 * p3 - 3.0 * p1 * p2) / 6.0;
    }
    case 4: {
      const double p3 = p[2];
      const double p4 = p[3];
      const double p1sq = p1 * p1;
      return (p1sq * p1sq - 6.0 * p4 + 3.0 * p2 * p2 - 6.0 * p2 * p1sq + 8.0 * p3 * p1) / 24.0;
    }
    default: {
      const double p3 = p[2];
      const double p4 = p[3];
      const double p5 = p[4];
      const double p1sq = p1 * p1;
      return (p1sq * p1sq * p1 - 10.0 * p2 * p1sq * p1 + 15.0 * p2 * p2 * p1 + 20.0 * p3 * p1sq - 20.0 * p3 * p2 -
              30.0 * p1 * p4 + 24.0 * p5) /
             120.0;
    }
  }
}

double dmas_fast(std::span<const double> slice, int n) {
  if (n < 2 || n > 5) throw InvalidArgument("dmas_fast supports orders 2..5");
  if (slice.size() < static_cast<std::size_t>(n))
    throw InvalidArgument("DMAS order " + std::to_string(n) + " needs at least that many channels");
  double p[5];
  power_sums(slice, n, std::span<double>(p, 5));
  return dmas_from_power_sums(std::span<const double>(p, 5), n);
}

double coherence_factor(std::span<const double> slice, double epsilon) {
  if (slice.empty()) throw InvalidArgument("coherence factor needs at least one channel");
  if (!(epsilon >= 0.0)) throw InvalidArgument("CF epsilon must be >= 0");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : slice) {
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq == 0.0) return 0.0;
  return sum * sum / (static_cast<double>(slice.size()) * sum_sq + epsilon);
}

double beamform_pixel(std::span<const double> slice, const BeamformerSpec& spec) {
  spec.validate();
  double value = 0.0;
  if (spec.kind == BeamformerKind::Das)
    value = das(slice);
  else if (spec.order <= 5)
    value = dmas_fast(slice, spec.order);
  else
    value = dmas_general(slice, spec.order);
  if (spec.apply_cf) value *= coherence_factor(slice, spec.cf_epsilon);
  return value;
}

namespace {

struct ChannelShift {
  long whole;   // floor(delay * fs)
  double frac;  // in [0, 1)
};

ChannelShift split_delay(double delay_seconds, double sample_rate) noexcept {
  const double d = delay_seconds * sample_rate;
  const double whole = std::floor(d);
  return {static_cast<long>(whole), d - whole};
}

inline double sample_or_zero(std::span<const double> x, long j) noexcept {
  return (j >= 0 && j < static_cast<long>(x.size())) ? x[static_cast<std::size_t>(j)] : 0.0;
}

}  // namespace

std::vector<double> pre_steer(const MultichannelRecording& rec, const DelayTable& delays, std::size_t direction,
                              std::size_t t_index, Interpolation interpolation) {
  if (delays.mic_count() != rec.channels()) throw InvalidArgument("delay table and recording disagree on channel count");
  if (direction >= delays.direction_count()) throw InvalidArgument("direction index out of range");
  if (t_index >= rec.length()) throw InvalidArgument("time index out of range");
  std::vector<double> out(rec.channels());
  const auto tau = delays.for_direction(direction);
  for (std::size_t i = 0; i < rec.channels(); ++i) {
    const auto shift = split_delay(tau[i], rec.sample_rate());
    const auto x = rec.channel(i);
    const long j = static_cast<long>(t_index) + shift.whole;
    if (interpolation == Interpolation::Linear) {
      out[i] = (1.0 - shift.frac) * sample_or_zero(x, j) + shift.frac * sample_or_zero(x, j + 1);
    } else {
      const auto taps = fractional_delay_taps(shift.frac);
      double acc = 0.0;
      for (int idx = 0; idx < kFractionalDelayTaps; ++idx) acc += taps[idx] * sample_or_zero(x, j - 31 + idx);
      out[i] = acc;
    }
  }
  return out;
}

AcousticImage::AcousticImage(Matrix pixels, DirectionGrid directions, double sample_rate, std::size_t start_sample)
    : pixels_(std::move(pixels)), directions_(std::move(directions)), sample_rate_(sample_rate),
      start_sample_(start_sample) {
  if (pixels_.rows() != directions_.size()) throw InvalidArgument("image rows must match the direction grid");
  if (!(sample_rate_ > 0.0)) throw InvalidArgument("image sample rate must be positive");
}

namespace {

constexpr std::size_t kTimeBlock = 256;

// What the per-pixel accumulation must produce for a set of specs.
struct KernelPlan {
  bool need_linear_sums = false;  // sum x and sum x^2 (DAS, CF)
  std::vector<int> orders;        // distinct DMAS orders, ascending
  bool need_log = false;          // some order other than 2 or 4
};

KernelPlan make_plan(std::span<const BeamformerSpec> specs) {
  KernelPlan plan;
  for (const auto& spec : specs) {
    if (spec.kind == BeamformerKind::Das || spec.apply_cf) plan.need_linear_sums = true;
    if (spec.kind == BeamformerKind::Dmas &&
        std::find(plan.orders.begin(), plan.orders.end(), spec.order) == plan.orders.end())
      plan.orders.push_back(spec.order);
  }
  std::sort(plan.orders.begin(), plan.orders.end());
  for (int n : plan.orders)
    if (n != 2 && n != 4) plan.need_log = true;
  return plan;
}

// Per-worker scratch: steered samples for one microphone over a time block and
// the running sums, laid out [quantity][time].
class RowKernel {
 public:
  RowKernel(const MultichannelRecording& rec, const DelayTable& delays, std::span<const BeamformerSpec> specs,
            const KernelPlan& plan, Interpolation interpolation)
      : rec_(rec), delays_(delays), specs_(specs), plan_(plan), interpolation_(interpolation),
        steered_(kTimeBlock), sum_(kTimeBlock), sum_sq_(kTimeBlock), magnitude_(kTimeBlock), sign_(kTimeBlock),
        log_(kTimeBlock), root_(kTimeBlock) {
    for (int n : plan_.orders) {
      power_.emplace_back(static_cast<std::size_t>(n) * kTimeBlock);
      if (n > 5) expansions_.push_back(&NewtonGirardExpansion::for_order(n));
      else expansions_.push_back(nullptr);
    }
  }

  void run(std::size_t direction, std::size_t t_begin, std::size_t t_end, std::span<Matrix> outputs,
           std::size_t column_offset) {
    for (std::size_t tb = t_begin; tb < t_end; tb += kTimeBlock) {
      const std::size_t len = std::min(kTimeBlock, t_end - tb);
      accumulate(direction, tb, len);
      finish(direction, tb - column_offset, len, outputs);
    }
  }

 private:
  void steer(std::span<const double> x, ChannelShift shift, std::size_t tb, std::size_t len) {
    const long base = static_cast<long>(tb) + shift.whole;
    const long n = static_cast<long>(x.size());
    double* out = steered_.data();
    if (interpolation_ == Interpolation::Linear) {
      const double w0 = 1.0 - shift.frac;
      const double w1 = shift.frac;
      // Columns whose two taps both fall inside the recording.
      const long inner_lo = std::clamp(-base, 0L, static_cast<long>(len));
      const long inner_hi = std::clamp(n - 1 - base, inner_lo, static_cast<long>(len));
      for (long t = 0; t < inner_lo; ++t) out[t] = w0 * sample_or_zero(x, base + t) + w1 * sample_or_zero(x, base + t + 1);
      const double* src = x.data() + base;
      for (long t = inner_lo; t < inner_hi; ++t) out[t] = w0 * src[t] + w1 * src[t + 1];
      for (long t = inner_hi; t < static_cast<long>(len); ++t)
        out[t] = w0 * sample_or_zero(x, base + t) + w1 * sample_or_zero(x, base + t + 1);
    } else {
      const auto taps = fractional_delay_taps(shift.frac);
      for (std::size_t t = 0; t < len; ++t) {
        const long j = base + static_cast<long>(t);
        double acc = 0.0;
        for (int idx = 0; idx < kFractionalDelayTaps; ++idx) acc += taps[idx] * sample_or_zero(x, j - 31 + idx);
        out[t] = acc;
      }
    }
  }

  template <int N>
  static void accumulate_powers(const double* s, double* p, std::size_t len) noexcept {
    for (std::size_t t = 0; t < len; ++t) {
      double q = s[t];
      p[t] += q;
      for (int k = 1; k < N; ++k) {
        q *= s[t];
        p[static_cast<std::size_t>(k) * kTimeBlock + t] += q;
      }
    }
  }

  static void accumulate_powers(int n, const double* s, double* p, std::size_t len) noexcept {
    switch (n) {
      case 2: accumulate_powers<2>(s, p, len); return;
      case 3: accumulate_powers<3>(s, p, len); return;
      case 4: accumulate_powers<4>(s, p, len); return;
      case 5: accumulate_powers<5>(s, p, len); return;
      default:
        for (std::size_t t = 0; t < len; ++t) {
          double q = s[t];
          p[t] += q;
          for (int k = 1; k < n; ++k) {
            q *= s[t];
            p[static_cast<std::size_t>(k) * kTimeBlock + t] += q;
          }
        }
    }
  }

  void accumulate(std::size_t direction, std::size_t tb, std::size_t len) {
    std::fill(sum_.begin(), sum_.end(), 0.0);
    std::fill(sum_sq_.begin(), sum_sq_.end(), 0.0);
    for (auto& p : power_) std::fill(p.begin(), p.end(), 0.0);

    const auto tau = delays_.for_direction(direction);
    const double* v = steered_.data();
    for (std::size_t i = 0; i < rec_.channels(); ++i) {
      steer(rec_.channel(i), split_delay(tau[i], rec_.sample_rate()), tb, len);
      if (plan_.need_linear_sums) {
        for (std::size_t t = 0; t < len; ++t) {
          sum_[t] += v[t];
          sum_sq_[t] += v[t] * v[t];
        }
      }
      if (plan_.orders.empty()) continue;
      for (std::size_t t = 0; t < len; ++t) {
        magnitude_[t] = std::abs(v[t]);
        sign_[t] = v[t] > 0.0 ? 1.0 : (v[t] < 0.0 ? -1.0 : 0.0);
      }
      if (plan_.need_log) {
        for (std::size_t t = 0; t < len; ++t) log_[t] = magnitude_[t] == 0.0 ? 0.0 : std::log(magnitude_[t]);
      }
      for (std::size_t o = 0; o < plan_.orders.size(); ++o) {
        const int n = plan_.orders[o];
        double* s = root_.data();
        if (n == 2) {
          for (std::size_t t = 0; t < len; ++t) s[t] = sign_[t] * std::sqrt(magnitude_[t]);
        } else if (n == 4) {
          for (std::size_t t = 0; t < len; ++t) s[t] = sign_[t] * std::sqrt(std::sqrt(magnitude_[t]));
        } else {
          const double order = static_cast<double>(n);
          for (std::size_t t = 0; t < len; ++t)
            s[t] = magnitude_[t] == 0.0 ? 0.0 : sign_[t] * std::exp(log_[t] / order);
        }
        accumulate_powers(n, s, power_[o].data(), len);
      }
    }
  }

  void finish(std::size_t direction, std::size_t column, std::size_t len, std::span<Matrix> outputs) {
    const double channels = static_cast<double>(rec_.channels());
    double p[64];
    for (std::size_t s = 0; s < specs_.size(); ++s) {
      const auto& spec = specs_[s];
      std::size_t slot = 0;
      if (spec.kind == BeamformerKind::Dmas)
        slot = static_cast<std::size_t>(
            std::find(plan_.orders.begin(), plan_.orders.end(), spec.order) - plan_.orders.begin());
      auto row = outputs[s].row(direction);
      for (std::size_t t = 0; t < len; ++t) {
        double value;
        if (spec.kind == BeamformerKind::Das) {
          value = sum_[t];
        } else {
          const int n = spec.order;
          for (int k = 0; k < n; ++k) p[k] = power_[slot][static_cast<std::size_t>(k) * kTimeBlock + t];
          value = n <= 5 ? dmas_from_power_sums(std::span<const double>(p, static_cast<std::size_t>(n)), n)
                         : expansions_[slot]->evaluate(std::span<const double>(p, static_cast<std::size_t>(n)));
        }
        if (spec.apply_cf) {
          const double cf = sum_sq_[t] == 0.0 ? 0.0 : sum_[t] * sum_[t] / (channels * sum_sq_[t] + spec.cf_epsilon);
          value *= cf;
        }
        row[column + t] = value;
      }
    }
  }

  const MultichannelRecording& rec_;
  const DelayTable& delays_;
  std::span<const BeamformerSpec> specs_;
  const KernelPlan& plan_;
  Interpolation interpolation_;
  std::vector<double> steered_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
  std::vector<double> magnitude_;
  std::vector<double> sign_;
  std::vector<double> log_;
  std::vector<double> root_;
  std::vector<std::vector<double>> power_;
  std::vector<const NewtonGirardExpansion*> expansions_;
};

}  // namespace

std::vector<AcousticImage> beamform_images(const MultichannelRecording& rec, const DelayTable& delays,
                                           std::span<const BeamformerSpec> specs, const BeamformOptions& options) {
  if (delays.mic_count() != rec.channels()) throw InvalidArgument("delay table and recording disagree on channel count");
  if (specs.empty()) return {};
  for (const auto& spec : specs) {
    spec.validate();
    if (spec.kind == BeamformerKind::Dmas && static_cast<std::size_t>(spec.order) > rec.channels())
      throw InvalidArgument("DMAS order " + std::to_string(spec.order) + " exceeds the channel count");
    if (spec.order > 64) throw InvalidArgument("DMAS order above 64 is not supported");
  }
  const std::size_t t_begin = options.time_begin;
  const std::size_t t_end = std::min(options.time_end, rec.length());
  if (t_begin >= t_end) throw InvalidArgument("empty time window");

  const KernelPlan plan = make_plan(specs);
  const std::size_t width = t_end - t_begin;
  std::vector<Matrix> outputs(specs.size(), Matrix(delays.direction_count(), width));

  parallel_for(delays.direction_count(), options.threads, 4, [&](std::size_t begin, std::size_t end) {
    RowKernel kernel(rec, delays, specs, plan, options.interpolation);
    for (std::size_t d = begin; d < end; ++d) kernel.run(d, t_begin, t_end, outputs, t_begin);
  });

  std::vector<AcousticImage> images;
  images.reserve(specs.size());
  for (auto& m : outputs) {
    for (double v : m.data())
      if (!std::isfinite(v)) throw NumericError("beamformer produced a non-finite pixel");
    images.emplace_back(std::move(m), delays.grid(), rec.sample_rate(), t_begin);
  }
  return images;
}

AcousticImage beamform_image(const MultichannelRecording& rec, const DelayTable& delays, const BeamformerSpec& spec,
                             const BeamformOptions& options) {
  auto images = beamform_images(rec, delays, std::span<const BeamformerSpec>(&spec, 1), options);
  return std::move(images.front());
}

}  // namespace airbeam
