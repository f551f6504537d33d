"""Entrypoint script.

`python main.py serve` runs the FastAPI app through `uvicorn.run()`, reading
`PORT` and `HOST` from the environment. Any other arguments go to the
command-line front end, e.g. `python main.py lf-lowerbound --s 1 --c 2`.
"""
from dotenv import load_dotenv
import os
import sys

load_dotenv()

if __name__ == '__main__':
    if sys.argv[1:2] == ['serve']:
        import uvicorn

        port = int(os.getenv('PORT', 8000))
        host = os.getenv('HOST', '0.0.0.0')
        uvicorn.run('app.main:app', host=host, port=port, reload=False)
    else:
        from app.cli import main

        sys.exit(main(sys.argv[1:]))
