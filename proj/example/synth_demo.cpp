// Renders a small scene, synthesizes a program for it and prints both.
//
//   synth_demo ["(program)"] [max-cost]

#include <cstdlib>
#include <iostream>

#include "symetric/synth.hpp"

int main(int argc, char** argv) {
  using namespace symetric;
  const std::string text = argc > 1 ? argv[1] : "(union (rect 0 13 15 15) (repeat (rect 0 10 3 12) 3 -3 4))";
  SynthConfig cfg;
  cfg.canvas = Canvas{16, 16};
  cfg.max_cost = argc > 2 ? std::atoi(argv[2]) : 6;

  const Scene goal = eval(parse(text), cfg.canvas);
  std::cout << "goal:\n" << ascii_art(goal) << '\n';

  const SynthResult r = metric_synth(goal, cfg);
  std::cout << "status: " << status_name(r.status) << "\n"
            << "states: " << r.stats.states << ", transitions: " << r.stats.transitions << "\n"
            << "time: " << r.stats.times.total << " s (construct " << r.stats.times.construct << ", repair "
            << r.stats.times.repair << ")\n";
  if (!r.program) return 1;
  std::cout << "program: " << serialize(*r.program) << "\n\n" << ascii_art(eval(*r.program, cfg.canvas));
  return 0;
}
