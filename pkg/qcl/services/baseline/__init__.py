# Classical baseline package
