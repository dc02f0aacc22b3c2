#include "dcmt/strategy.hpp"

namespace dcmt {

StrategyTraits traits(Strategy s) {
  switch (s) {
    case Strategy::marl_lt_dsk:
      return {true, true, false, false, false, SchedulerKind::drop_send_keep, 3};
    case Strategy::marl_lt_sk:
      return {true, true, false, false, false, SchedulerKind::send_keep, 2};
    case Strategy::marl_el_sk:
      return {true, true, true, true, false, SchedulerKind::send_keep, 2};
    case Strategy::marl_el_smax:
      return {true, true, true, true, false, SchedulerKind::send_max, 1};
    case Strategy::marl_el_lelf:
      return {true, false, true, true, false, SchedulerKind::lelf, 1};
    case Strategy::mwr_el_lelf:
      return {false, false, true, true, false, SchedulerKind::lelf, 1};
    case Strategy::umw_fifo:
      return {false, false, false, false, true, SchedulerKind::fifo, 1};
  }
  return {};
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::marl_lt_dsk: return "marl_lt_dsk";
    case Strategy::marl_lt_sk: return "marl_lt_sk";
    case Strategy::marl_el_sk: return "marl_el_sk";
    case Strategy::marl_el_smax: return "marl_el_smax";
    case Strategy::marl_el_lelf: return "marl_el_lelf";
    case Strategy::mwr_el_lelf: return "mwr_el_lelf";
    case Strategy::umw_fifo: return "umw_fifo";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies)
    if (to_string(s) == name) return s;
  return std::nullopt;
}

}  // namespace dcmt
