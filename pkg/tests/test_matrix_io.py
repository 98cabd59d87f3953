"""Text formats for matrices, shares and permutations."""

import pytest

from src.exceptions import FormatError
from src.field import FieldMatrix
from src.matrix_io import matrix_parser
from src.shuffle import PermTriple


def test_matrix_text_layout(gf89):
    matrix = FieldMatrix([[0, 5, 88], [1, 0, 0]], gf89)
    text = matrix_parser.format_matrix(matrix)
    assert text == "q 89 rows 2 cols 3\n0 5 88\n1 0 0\n"
    assert matrix_parser.parse_matrix(text) == matrix


def test_gf256_header_selects_binary_field():
    matrix = matrix_parser.parse_matrix("q 256 rows 1 cols 2\n255 7\n")
    assert matrix.field.is_binary


def test_blank_lines_are_ignored(gf7):
    assert matrix_parser.parse_matrix("\nq 7 rows 1 cols 1\n\n3\n") == FieldMatrix([[3]], gf7)


@pytest.mark.parametrize("text", [
    "",
    "q 89 rows 2\n1 2\n",
    "rows 1 q 89 cols 1\n0\n",
    "q 89 rows 2 cols 2\n1 2\n",
    "q 89 rows 1 cols 2\n1 2 3\n",
    "q 89 rows 1 cols 2\n1 x\n",
    "q 89 rows 1 cols 2\n1 89\n",
    "q 89 rows 1 cols 1\n-1\n",
    "q 12 rows 1 cols 1\n0\n",
    "q 89 rows 0 cols 1\n",
])
def test_malformed_matrices_rejected(text):
    with pytest.raises(FormatError):
        matrix_parser.parse_matrix(text)


def test_share_header(gf89):
    share = FieldMatrix([[4, 0]], gf89)
    text = matrix_parser.format_share(share, alpha=3, share_index=1, n=4)
    assert text.splitlines()[0] == "alpha 3 share-index 1 n 4"
    assert matrix_parser.parse_share(text) == (3, 1, 4, share)


@pytest.mark.parametrize("header", ["alpha 0 share-index 0 n 2", "alpha 3 share-index 2 n 2",
                                    "alpha 89 share-index 0 n 2", "share-index 0 alpha 3 n 2"])
def test_bad_share_headers(header):
    with pytest.raises(FormatError):
        matrix_parser.parse_share(header + "\nq 89 rows 1 cols 1\n0\n")


def test_permutation_file(tmp_path):
    perms = PermTriple([2, 0, 1], [1, 0], [0])
    path = tmp_path / "p.perm"
    matrix_parser.write_permutations(path, perms)
    assert path.read_text(encoding="utf-8") == "2 0 1\n1 0\n0\n"
    assert matrix_parser.read_permutations(path) == perms


@pytest.mark.parametrize("text", ["0 1\n0\n", "0 0\n0\n0\n", "0 a\n0\n0\n"])
def test_bad_permutation_files(text):
    with pytest.raises(FormatError):
        matrix_parser.parse_permutations(text)


def test_missing_file_is_format_error(tmp_path):
    with pytest.raises(FormatError):
        matrix_parser.read_matrix(tmp_path / "absent.txt")
