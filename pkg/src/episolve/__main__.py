from episolve.app.cli import main

main()
