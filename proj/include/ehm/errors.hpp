#pragma once

#include <stdexcept>
#include <string>

namespace ehm {

// Base for all domain-level failures. The CLI maps these to exit code 2;
// usage errors (bad flags) exit 1.
struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

#define EHM_DEFINE_ERROR(NAME)                                          \
  struct NAME : domain_error {                                          \
    explicit NAME(const std::string& what) : domain_error(#NAME ": " + what) {} \
  }

EHM_DEFINE_ERROR(RationalInput);
EHM_DEFINE_ERROR(InsufficientDepth);
EHM_DEFINE_ERROR(SingularSymbol);
EHM_DEFINE_ERROR(WrongRegion);
EHM_DEFINE_ERROR(ConvergenceFailure);
EHM_DEFINE_ERROR(WindingNonzero);
EHM_DEFINE_ERROR(SmallDivisor);
EHM_DEFINE_ERROR(Overflow);
EHM_DEFINE_ERROR(NotHomotopicToIdentity);
EHM_DEFINE_ERROR(GridTooCoarse);
EHM_DEFINE_ERROR(NoNearbyEigenvalue);
EHM_DEFINE_ERROR(CenterVanishes);
EHM_DEFINE_ERROR(WindowEmpty);
EHM_DEFINE_ERROR(NearSingular);
EHM_DEFINE_ERROR(DegenerateNodes);
EHM_DEFINE_ERROR(SupportLeak);
EHM_DEFINE_ERROR(DetVanishes);
EHM_DEFINE_ERROR(VectorVanishes);
EHM_DEFINE_ERROR(NotCaseB);
EHM_DEFINE_ERROR(SquareRootBranch);
EHM_DEFINE_ERROR(DegenerateAverage);
EHM_DEFINE_ERROR(IoError);

#undef EHM_DEFINE_ERROR

}  // namespace ehm
