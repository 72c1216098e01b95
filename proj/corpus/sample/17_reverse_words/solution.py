def main_solution(sentence):
    words = sentence.split()
    result = []
    i = len(words) - 1
    while i >= 0:
        result.append(words[i])
        i -= 1
    return ' '.join(result)
