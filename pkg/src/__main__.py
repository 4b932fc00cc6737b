"""Entry point for running the toolkit as a module: python -m src"""
from .cli import main

if __name__ == '__main__':
    main()
