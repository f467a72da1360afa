from elastoscatter.cli.commands import beam, greens, propagate, reflect, validate

# サブコマンド名 → (prepare, run) を持つモジュール
COMMANDS = {
    "reflect": reflect,
    "propagate": propagate,
    "greens": greens,
    "beam": beam,
    "validate": validate,
}
