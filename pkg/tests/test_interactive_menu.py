import interactive_menu


def _run(monkeypatch, answers):
    replies = iter(answers)
    monkeypatch.setattr('builtins.input', lambda prompt='': next(replies))
    interactive_menu.main()


def test_list_and_exit(monkeypatch, capsys):
    _run(monkeypatch, ['1', '0'])
    output = capsys.readouterr().out
    assert "CORPUS FORMS" in output
    assert "navier_stokes" in output
    assert "Thanks for using" in output


def test_compile_and_signatures(monkeypatch, capsys):
    _run(monkeypatch, ['2', 'poisson', '', 'n', '3', 'laplacian_2terms', '', '0'])
    output = capsys.readouterr().out
    assert "COMPILED FORM: poisson" in output
    assert "1 reference tensor(s) for 2 monomial(s)" in output


def test_verify_and_assemble(monkeypatch, capsys):
    _run(monkeypatch, ['4', 'mass', '', '', '', '6', 'poisson', '2', '', '0'])
    output = capsys.readouterr().out
    assert "Contraction program matches direct quadrature" in output
    assert "Assembled 'poisson' on 2 cells: shape (9, 9)" in output


def test_bad_choices_are_reported(monkeypatch, capsys):
    _run(monkeypatch, ['9', '2', 'heat', '5', 'mass', '2', '1', '0'])
    output = capsys.readouterr().out
    assert "Invalid choice" in output
    assert "Unknown form" in output
    assert "REFERENCE TENSOR BENCHMARK" in output
