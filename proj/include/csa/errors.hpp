#pragma once

#include <stdexcept>
#include <string>

namespace csa {

// Base of every error raised by the toolkit. The CLI maps ConfigError to exit
// status 2 and everything else derived from Error to exit status 3.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CSA_DEFINE_ERROR(Name)                                        \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(#Name, what) {}    \
  };

CSA_DEFINE_ERROR(InvalidArgument)
CSA_DEFINE_ERROR(DimensionMismatch)
CSA_DEFINE_ERROR(JammedBeforeTarget)
CSA_DEFINE_ERROR(DivergentEstimate)
CSA_DEFINE_ERROR(NonFiniteLikelihood)
CSA_DEFINE_ERROR(EmptyGraph)
CSA_DEFINE_ERROR(TooLarge)
CSA_DEFINE_ERROR(BadSize)
CSA_DEFINE_ERROR(WindowTooLarge)
CSA_DEFINE_ERROR(Disconnected)
CSA_DEFINE_ERROR(StateSpaceTooLarge)
CSA_DEFINE_ERROR(NotNormalized)
CSA_DEFINE_ERROR(PointAlreadyPresent)
CSA_DEFINE_ERROR(ConfigError)
CSA_DEFINE_ERROR(IoError)

#undef CSA_DEFINE_ERROR

// t_j = 0 for some 1 <= j <= N_hat: the data carry no information on beta_j.
class NonIdentifiable : public Error {
 public:
  explicit NonIdentifiable(int index)
      : Error("NonIdentifiable",
              "t_" + std::to_string(index) + " = 0, beta_" + std::to_string(index) +
                  " cannot be estimated"),
        index_(index) {}

  int index() const noexcept { return index_; }

 private:
  int index_;
};

}  // namespace csa
