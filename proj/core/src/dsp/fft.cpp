#include "srir/dsp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

#include "srir/error.hpp"

namespace srir::dsp {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::vector<double> re(n);
  std::vector<std::complex<double>> cx(n / 2 + 1);
  auto* c = reinterpret_cast<fftw_complex*>(cx.data());
  const int size = static_cast<int>(n);
  forward_plan_ = fftw_plan_dft_r2c_1d(size, re.data(), c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  inverse_plan_ = fftw_plan_dft_c2r_1d(size, c, re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr) fail(ErrorCode::kNumerical, "FFTW planning failed");
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

const RealFft& RealFft::get(std::size_t n) {
  if (n < 2) fail(ErrorCode::kShape, "FFT size must be >= 2");
  auto& mutex = planner_mutex();  // constructed before (so destroyed after) the cache
  static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot.reset(new RealFft(n));
  return *slot;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != bins()) fail(ErrorCode::kShape, "FFT buffer size mismatch");
  // FFTW may not write to the input of an r2c transform; the const_cast is safe.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  if (in.size() != bins() || out.size() != n_) fail(ErrorCode::kShape, "FFT buffer size mismatch");
  // c2r destroys its input.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
}

std::vector<double> power_spectrum(std::span<const double> x, std::size_t& fft_size) {
  fft_size = 2;
  while (fft_size < x.size()) fft_size *= 2;
  std::vector<double> buf(fft_size, 0.0);
  std::copy(x.begin(), x.end(), buf.begin());
  const auto& fft = RealFft::get(fft_size);
  std::vector<std::complex<double>> spec(fft.bins());
  fft.forward(buf, spec);
  std::vector<double> out(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) out[k] = std::norm(spec[k]);
  return out;
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  std::size_t n = 2;
  while (n < out_len) n *= 2;
  const auto& fft = RealFft::get(n);
  std::vector<double> pa(n, 0.0);
  std::vector<double> pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<std::complex<double>> sa(fft.bins());
  std::vector<std::complex<double>> sb(fft.bins());
  fft.forward(pa, sa);
  fft.forward(pb, sb);
  for (std::size_t k = 0; k < sa.size(); ++k) sa[k] *= sb[k];
  std::vector<double> out(n);
  fft.inverse(sa, out);
  out.resize(out_len);
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

}  // namespace srir::dsp
