#include "siad/random.hpp"

#include <boost/math/distributions/normal.hpp>

namespace siad {

RandomStream RandomStream::derive(std::initializer_list<std::uint64_t> labels) const {
  RandomStream child(0);
  std::uint64_t k = key_;
  for (std::uint64_t label : labels) k = mix(k ^ mix(label + kGamma));
  child.key_ = k;
  return child;
}

double RandomStream::uniform_at(std::uint64_t counter) const noexcept {
  return (static_cast<double>(bits_at(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal_at(std::uint64_t counter) const {
  static const boost::math::normal standard;
  return boost::math::quantile(standard, uniform_at(counter));
}

}  // namespace siad
