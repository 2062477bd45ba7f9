from openbcs.cli import main

main()
