#pragma once

#include <fftw3.h>

#include <memory>
#include <mutex>
#include <utility>

#include "qpgamma/errors.hpp"

namespace qpgamma::detail {

struct FftwDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
template<class T>
using FftwPtr = std::unique_ptr<T[], FftwDeleter>;

template<class T>
FftwPtr<T> fftw_array(std::size_t n)
{
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p)
        throw NumericalError("FFT buffer allocation failed");
    return FftwPtr<T>(p);
}

// The FFTW planner is not thread safe; execution is.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

class FftwPlan {
  public:
    template<class MakePlan>
    explicit FftwPlan(MakePlan&& make)
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = std::forward<MakePlan>(make)();
        if (!plan_)
            throw NumericalError("FFT planning failed");
    }
    FftwPlan(const FftwPlan&) = delete;
    FftwPlan& operator=(const FftwPlan&) = delete;
    ~FftwPlan()
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    fftw_plan get() const noexcept { return plan_; }

  private:
    fftw_plan plan_ = nullptr;
};

}  // namespace qpgamma::detail
