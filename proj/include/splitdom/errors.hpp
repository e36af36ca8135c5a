#pragma once

#include <stdexcept>
#include <string>

namespace splitdom {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define SPLITDOM_DEFINE_ERROR(Name)                                 \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

SPLITDOM_DEFINE_ERROR(DimensionError);
SPLITDOM_DEFINE_ERROR(InvalidArgument);
SPLITDOM_DEFINE_ERROR(SingularDirectionError);
SPLITDOM_DEFINE_ERROR(DegenerateSplittingError);
SPLITDOM_DEFINE_ERROR(DivergenceError);
SPLITDOM_DEFINE_ERROR(IndexError);
SPLITDOM_DEFINE_ERROR(IllConditionedError);
SPLITDOM_DEFINE_ERROR(InvertibilityError);
SPLITDOM_DEFINE_ERROR(InvalidSeriesError);
SPLITDOM_DEFINE_ERROR(NotFlowCenteredError);
SPLITDOM_DEFINE_ERROR(NoGapError);
SPLITDOM_DEFINE_ERROR(ConeFieldShapeError);
SPLITDOM_DEFINE_ERROR(FlowNotResolvedError);
SPLITDOM_DEFINE_ERROR(TheoremViolationError);
SPLITDOM_DEFINE_ERROR(ParseError);

#undef SPLITDOM_DEFINE_ERROR

/// The orbit came closer to a zero of the field than the singularity floor.
class SingularityEncounteredError : public Error {
 public:
  SingularityEncounteredError(const std::string& what, double time)
      : Error("SingularityEncounteredError: " + what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Cone or subspace iteration failed to settle; carries the last successive angle.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, double last_angle)
      : Error("NotConvergedError: " + what), last_angle_(last_angle) {}
  double last_angle() const noexcept { return last_angle_; }

 private:
  double last_angle_;
};

}  // namespace splitdom
