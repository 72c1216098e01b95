def main_solution(word, shift):
    alphabet = 'abcdefghijklmnopqrstuvwxyz'
    out = []
    for ch in word:
        pos = alphabet.index(ch)
        out.append(alphabet[(pos + shift) % 26])
    return ''.join(out)
