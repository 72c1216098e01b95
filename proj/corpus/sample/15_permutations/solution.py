from itertools import permutations

def main_solution(string):
    char_list = list(string)
    result = []
    for p in permutations(char_list):
        result.append(''.join(p))
    return result
