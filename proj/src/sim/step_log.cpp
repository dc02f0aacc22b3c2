#include "dcmt/step_log.hpp"

namespace dcmt {

Count StepLog::total_arrivals() const {
  Count n = 0;
  for (Count a : arrivals) n += a;
  return n;
}

Count StepLog::total_deliveries() const {
  Count n = 0;
  for (const auto& d : deliveries) n += d.count;
  return n;
}

Count StepLog::total_drops() const {
  Count n = 0;
  for (const auto& d : drops) n += d.count;
  return n;
}

Count StepLog::total_expired(ExpiryCause cause) const {
  Count n = 0;
  for (const auto& e : expiries)
    if (e.cause == cause) n += e.count;
  return n;
}

}  // namespace dcmt
