#pragma once

// Built-in domain texts. The committed files under domains/ are byte-equal
// copies; the test suite checks that they stay in sync.

#include <string_view>

#include "metagarden/pddl.hpp"

namespace metagarden {

/// The gardener's initial beliefs: spray only affects the sprayed cell.
inline constexpr std::string_view kGardenDomainText = R"((define (domain garden)
  (:requirements :strips :typing :negative-preconditions :conditional-effects :universal-effects)
  (:types mapgrid)
  (:predicates
    (agent-at ?p - mapgrid)
    (native-at ?p - mapgrid)
    (invasive-at ?p - mapgrid)
    (in-garden ?p - mapgrid)
    (connected ?from - mapgrid ?to - mapgrid)
    (adj_east ?p0 - mapgrid ?p1 - mapgrid)
    (adj_ne ?p0 - mapgrid ?p1 - mapgrid)
    (adj_north ?p0 - mapgrid ?p1 - mapgrid)
    (adj_nw ?p0 - mapgrid ?p1 - mapgrid)
    (adj_se ?p0 - mapgrid ?p1 - mapgrid)
    (adj_south ?p0 - mapgrid ?p1 - mapgrid)
    (adj_sw ?p0 - mapgrid ?p1 - mapgrid)
    (adj_west ?p0 - mapgrid ?p1 - mapgrid))

  (:action move
    :parameters (?from - mapgrid ?to - mapgrid)
    :precondition
    (and
      (agent-at ?from)
      (connected ?from ?to))
    :effect
    (and
      (not (agent-at ?from))
      (agent-at ?to)))

  (:action spray
    :parameters (?to - mapgrid)
    :precondition
    (and
      (agent-at ?to)
      (in-garden ?to))
    :effect
    (and
      (not (native-at ?to))
      (not (invasive-at ?to))))
)
)";

/// Meta-level operators available to the controller.
inline constexpr std::string_view kMetaDomainText = R"((define (domain meta)
  (:requirements :strips :typing)
  (:types operator state)
  (:predicates
    (has-discrepancy ?s - state)
    (outdated ?op - operator)
    (caused_discrepancy ?op - operator)
    (learned ?op - operator ?s - state))

  (:action perform-learning
    :parameters (?op - operator ?current-state - state)
    :precondition
    (and
      (has-discrepancy ?current-state)
      (outdated ?op)
      (caused_discrepancy ?op))
    :effect
    (and
      (learned ?op ?current-state)))
)
)";

inline const Domain& garden_domain() {
  static const Domain d = parse_domain(kGardenDomainText);
  return d;
}

inline const Domain& meta_domain() {
  static const Domain d = parse_domain(kMetaDomainText);
  return d;
}

}  // namespace metagarden
