#include "tracecot/lang/samples.hpp"

namespace tracecot::lang {

namespace {

// Numbered to match the original file, where the function starts on line 38.
constexpr std::string_view kBase7 = R"(def main_solution(num):
    if num < 0:
        return '-' + str(main_solution(-num))
    elif num < 7:
        return str(num)
    else:
        return str(main_solution(num // 7)) + str(num % 7)
)";

constexpr std::string_view kJosephus = R"(def josephus_problem(array, k, index):
    if len(array) == 1:
        return array[0]
    index = (index + k) % len(array)
    array.pop(index)
    return josephus_problem(array, k, index)

def main_solution(n, k):
    array = list(range(1, n + 1))
    k = k - 1
    return josephus_problem(array, k, 0)
)";

constexpr std::string_view kPermutations = R"(from itertools import permutations

def main_solution(string):
    char_list = list(string)
    result = []
    for p in permutations(char_list):
        result.append(''.join(p))
    return result
)";

}  // namespace

const std::vector<SampleProgram>& sample_programs() {
  static const std::vector<SampleProgram> samples = {
      {"base7", "Given an integer, what is its representation in base 7?", kBase7,
       R"({"num": 100})", 37},
      {"josephus",
       "In a historical game of elimination, a group of people stand in a circle. Starting from a "
       "given person, every k-th person is eliminated until only one person remains. Given the "
       "number of people in the circle and the step count, which position in the circle will be "
       "the last remaining person?",
       kJosephus, R"({"n": 17, "k": 3})", 0},
      {"permutations",
       "Given a string consisting of lowercase letters, what are all the possible unique "
       "permutations of the string?",
       kPermutations, R"({"string": "hrf"})", 0},
  };
  return samples;
}

const SampleProgram* find_sample(std::string_view name) {
  for (const auto& sample : sample_programs()) {
    if (sample.name == name) return &sample;
  }
  return nullptr;
}

}  // namespace tracecot::lang
