#include "scatterpty/fft.hpp"

#include <fftw3.h>

#include <atomic>
#include <map>
#include <mutex>
#include <tuple>

namespace scatterpty::fft {

namespace {

std::atomic<PlannerEffort> g_effort{PlannerEffort::estimate};

// FFTW's planner is not thread-safe; execution of an existing plan on new
// arrays is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int width, int height, int sign, PlannerEffort effort) {
    const Key key{width, height, sign, effort};
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    auto* scratch = fftw_alloc_complex(n);
    const unsigned flags = effort == PlannerEffort::measure ? FFTW_MEASURE : FFTW_ESTIMATE;
    fftw_plan plan = fftw_plan_dft_2d(height, width, scratch, scratch, sign, flags);
    fftw_free(scratch);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  using Key = std::tuple<int, int, int, PlannerEffort>;
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(ComplexField& field, int sign) {
  fftw_plan plan = cache().get(field.width(), field.height(), sign, g_effort.load());
  auto* data = reinterpret_cast<fftw_complex*>(field.raw());
  fftw_execute_dft(plan, data, data);
}

}  // namespace

void set_planner_effort(PlannerEffort effort) { g_effort.store(effort); }

PlannerEffort planner_effort() { return g_effort.load(); }

void forward(ComplexField& field) { execute(field, FFTW_FORWARD); }

void inverse(ComplexField& field) {
  execute(field, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(field.size());
  for (Complex& v : field.data()) v *= scale;
}

}  // namespace scatterpty::fft
